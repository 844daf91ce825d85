#pragma once

#include "wincascade/calibrate.hpp"

#include <filesystem>
#include <iosfwd>

namespace wincascade {

// Plain-text key = value policy file. '#' starts a comment line. Keys:
//   format, stages, task, method, combine, point, coverage_base, beta,
//   window_base, final_tau, and per exit e = 1..M-1:
//   exit.<e>.tau, exit.<e>.half_width, exit.<e>.window = <lower>,<upper>
// Reals are written with 17 significant digits; infinities as inf / -inf.

void write_policy(const CalibratedPolicy& policy, std::ostream& out);
void write_policy(const CalibratedPolicy& policy, const std::filesystem::path& path);
CalibratedPolicy read_policy(std::istream& in, const std::string& source_name = "<stream>");
CalibratedPolicy read_policy(const std::filesystem::path& path);

Task parse_task(const std::string& text);
ScoreKind parse_score_kind(const std::string& text);
Combine parse_combine(const std::string& text);
CoverageBase parse_coverage_base(const std::string& text);

}  // namespace wincascade
