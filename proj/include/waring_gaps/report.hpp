// Verification reports: {certificate, per_condition, summary} records.
#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace waring_gaps {

enum class Verdict { pass, fail, inconclusive };

/// Overall outcome; the integer value is the CLI exit status.
enum class Outcome { pass = 0, fail = 1, inconclusive = 2, invalid = 3 };

struct Condition {
  std::string name;
  Verdict verdict = Verdict::pass;
  nlohmann::json witness;
  /// A failed invariant makes the whole certificate invalid rather than
  /// merely failing.
  bool invariant = false;
};

class Report {
 public:
  nlohmann::json certificate = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();

  void add(std::string name, Verdict verdict, nlohmann::json witness = nlohmann::json::object());
  void add_invariant(std::string name, bool holds, nlohmann::json witness = nlohmann::json::object());
  /// Shorthand for a pass/fail hypothesis.
  void check(std::string name, bool holds, nlohmann::json witness = nlohmann::json::object());

  const std::vector<Condition>& conditions() const { return conditions_; }
  const Condition* find(const std::string& name) const;
  Verdict verdict_of(const std::string& name) const;

  Outcome outcome() const;
  nlohmann::json to_json() const;

 private:
  std::vector<Condition> conditions_;
};

std::string to_string(Verdict v);
std::string to_string(Outcome o);
Verdict verdict_from_string(const std::string& s);

/// Combines verdicts: any fail -> fail, else any inconclusive -> inconclusive.
Verdict combine(Verdict a, Verdict b);

}  // namespace waring_gaps
