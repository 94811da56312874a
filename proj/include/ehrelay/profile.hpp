#pragma once

// Harvest profiles. Event k at time t^k carries energy that becomes usable
// from epoch k+1 onward; the t = 0 event funds epoch 1. With K+1 events
// there are K+1 epochs, the last one ending at the horizon T.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ehrelay/capacity.hpp"

namespace ehrelay {

struct HarvestEvent {
  double t = 0.0;         ///< s
  double e_source = 0.0;  ///< J
  double e_relay = 0.0;   ///< J
};

struct HarvestProfile {
  std::vector<HarvestEvent> events;
  double horizon = 0.0;  ///< deadline T (s)

  /// Number of events minus one; there are K+1 epochs.
  std::size_t K() const noexcept { return events.empty() ? 0 : events.size() - 1; }
  std::size_t num_epochs() const noexcept { return events.size(); }
};

/// A profile file: channel plus harvest profile.
struct Problem {
  ChannelParams channel;
  HarvestProfile profile;
};

enum class Node { Source, Relay };

struct Epoch {
  std::size_t index = 0;  ///< 1-based
  double start = 0.0;
  double end = 0.0;
  double len = 0.0;
};

/// Every invariant violation, empty when the profile is valid.
std::vector<std::string> validation_issues(const HarvestProfile& p);
/// Throws ValidationError listing all issues.
void validate(const HarvestProfile& p);
/// Non-fatal observations, e.g. a node that never harvests.
std::vector<std::string> profile_warnings(const HarvestProfile& p);

std::vector<Epoch> epochs(const HarvestProfile& p);
std::vector<double> epoch_lengths(const HarvestProfile& p);

std::vector<double> energies(const HarvestProfile& p, Node node);
/// Energy harvested by events 0..k-1, the budget of the first k epochs.
/// 1 <= k <= K+1.
double cumulative_energy(const HarvestProfile& p, Node node, std::size_t k);
/// cumulative_energy for k = 1..K+1.
std::vector<double> cumulative_energies(const HarvestProfile& p, Node node);

/// gamma > 0 with E2 = gamma * E1 eventwise (relative tolerance 1e-9, 0/0
/// consistent), or nothing.
std::optional<double> proportionality(const HarvestProfile& p);

/// Parse the JSON profile format. Throws ParseError naming the offending
/// field; semantic checks are left to validate().
Problem parse_problem(const std::string& text);
Problem load_problem(const std::string& path);
/// JSON with round-trip exact doubles.
std::string serialize_problem(const Problem& pr);
/// One row per event: t_s,e_source_J,e_relay_J.
std::string events_csv(const HarvestProfile& p);

}  // namespace ehrelay
