#include "ehrelay/profile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ehrelay/errors.hpp"

namespace ehrelay {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double number_field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field " + path + "." + key);
  if (!it->is_number()) throw ParseError("field " + path + "." + key + " must be a number");
  return it->get<double>();
}

}  // namespace

std::vector<std::string> validation_issues(const HarvestProfile& p) {
  std::vector<std::string> issues;
  if (p.events.empty()) {
    issues.emplace_back("profile has no events");
    return issues;
  }
  if (p.events.front().t != 0.0) issues.emplace_back("first event must be at t=0");
  for (std::size_t k = 0; k < p.events.size(); ++k) {
    const auto& e = p.events[k];
    const std::string at = "event " + std::to_string(k);
    if (!std::isfinite(e.t) || e.t < 0.0) issues.push_back(at + ": time must be finite and >= 0");
    if (!std::isfinite(e.e_source) || e.e_source < 0.0) {
      issues.push_back(at + ": e_source must be finite and >= 0");
    }
    if (!std::isfinite(e.e_relay) || e.e_relay < 0.0) {
      issues.push_back(at + ": e_relay must be finite and >= 0");
    }
    if (k > 0 && !(e.t > p.events[k - 1].t)) {
      issues.push_back(at + ": times must be strictly increasing");
    }
  }
  if (!std::isfinite(p.horizon) || !(p.horizon > p.events.back().t)) {
    issues.emplace_back("horizon before last event");
  }
  return issues;
}

void validate(const HarvestProfile& p) {
  auto issues = validation_issues(p);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::vector<std::string> profile_warnings(const HarvestProfile& p) {
  std::vector<std::string> w;
  bool src = false, rel = false;
  for (const auto& e : p.events) {
    src = src || e.e_source > 0.0;
    rel = rel || e.e_relay > 0.0;
  }
  if (!src) w.emplace_back("source never harvests; schedule is zero");
  if (!rel) w.emplace_back("relay never harvests; relay stays silent");
  return w;
}

std::vector<Epoch> epochs(const HarvestProfile& p) {
  validate(p);
  std::vector<Epoch> out(p.events.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double end = i + 1 < p.events.size() ? p.events[i + 1].t : p.horizon;
    out[i] = {i + 1, p.events[i].t, end, end - p.events[i].t};
  }
  return out;
}

std::vector<double> epoch_lengths(const HarvestProfile& p) {
  std::vector<double> l;
  for (const auto& e : epochs(p)) l.push_back(e.len);
  return l;
}

std::vector<double> energies(const HarvestProfile& p, Node node) {
  std::vector<double> e;
  e.reserve(p.events.size());
  for (const auto& ev : p.events) e.push_back(node == Node::Source ? ev.e_source : ev.e_relay);
  return e;
}

double cumulative_energy(const HarvestProfile& p, Node node, std::size_t k) {
  if (k < 1 || k > p.events.size()) {
    throw std::out_of_range("epoch count " + std::to_string(k) + " outside [1, " +
                            std::to_string(p.events.size()) + "]");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    s += node == Node::Source ? p.events[i].e_source : p.events[i].e_relay;
  }
  return s;
}

std::vector<double> cumulative_energies(const HarvestProfile& p, Node node) {
  std::vector<double> c;
  double s = 0.0;
  for (const auto& ev : p.events) {
    s += node == Node::Source ? ev.e_source : ev.e_relay;
    c.push_back(s);
  }
  return c;
}

std::optional<double> proportionality(const HarvestProfile& p) {
  constexpr double kRelTol = 1e-9;
  const HarvestEvent* ref = nullptr;
  for (const auto& e : p.events) {
    if (ref == nullptr || e.e_source > ref->e_source) ref = &e;
  }
  if (ref == nullptr || !(ref->e_source > 0.0)) return std::nullopt;
  const double gamma = ref->e_relay / ref->e_source;
  if (!(gamma > 0.0)) return std::nullopt;
  for (const auto& e : p.events) {
    const double want = gamma * e.e_source;
    if (std::abs(e.e_relay - want) > kRelTol * std::max(e.e_relay, want)) return std::nullopt;
  }
  return gamma;
}

Problem parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level must be an object");
  Problem pr;
  const auto ch = doc.find("channel");
  if (ch == doc.end()) throw ParseError("missing field channel");
  pr.channel.a = number_field(*ch, "a", "channel");
  pr.channel.b = number_field(*ch, "b", "channel");
  pr.channel.noise = number_field(*ch, "noise", "channel");
  pr.profile.horizon = number_field(doc, "horizon", "$");
  const auto ev = doc.find("events");
  if (ev == doc.end()) throw ParseError("missing field events");
  if (!ev->is_array()) throw ParseError("field events must be an array");
  for (std::size_t k = 0; k < ev->size(); ++k) {
    const std::string path = "events[" + std::to_string(k) + "]";
    const json& e = (*ev)[k];
    pr.profile.events.push_back({number_field(e, "t", path), number_field(e, "e_source", path),
                                 number_field(e, "e_relay", path)});
  }
  return pr;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string serialize_problem(const Problem& pr) {
  json doc;
  doc["channel"] = {{"a", pr.channel.a}, {"b", pr.channel.b}, {"noise", pr.channel.noise}};
  doc["horizon"] = pr.profile.horizon;
  doc["events"] = json::array();
  for (const auto& e : pr.profile.events) {
    doc["events"].push_back({{"t", e.t}, {"e_source", e.e_source}, {"e_relay", e.e_relay}});
  }
  return doc.dump(2) + "\n";
}

std::string events_csv(const HarvestProfile& p) {
  std::string out = "t_s,e_source_J,e_relay_J\n";
  for (const auto& e : p.events) {
    out += fmt(e.t) + "," + fmt(e.e_source) + "," + fmt(e.e_relay) + "\n";
  }
  return out;
}

}  // namespace ehrelay
