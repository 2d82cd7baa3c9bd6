#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hklab/core.hpp"

namespace hklab {

using json = nlohmann::json;

enum class Status { measured, pass, fail, infeasible, not_applicable };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

struct CertReport {
  std::string inequality;
  double constant = 0.0;
  Status status = Status::measured;
  std::optional<double> budget;
  std::string family;
  std::string provenance;
  json witness = json::object();
  std::map<std::string, double> values;
  std::vector<std::string> notes;
  std::optional<Vec> witness_function;

  // Sets status from the budget unless the report is already infeasible or n/a.
  CertReport& with_budget(double b);
  bool ok() const;
};

json to_json(const CertReport& r);
CertReport report_from_json(const json& j);

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);

}  // namespace hklab
