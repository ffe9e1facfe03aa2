#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace sticky {

std::string version_string();

// "# version: ..." and "# config: {...}" comment lines for CSV outputs.
void write_csv_preamble(std::ostream& out, const nlohmann::json& config);

// Wraps a payload with the version and resolved config.
nlohmann::json with_provenance(nlohmann::json payload, const nlohmann::json& config);

// Quantile fan (5-95, 25-75, median) of equally sampled series over t.
void write_fan_chart_svg(std::ostream& out, const std::string& title, const Eigen::VectorXd& t,
                         const std::vector<Eigen::VectorXd>& series);

}  // namespace sticky
