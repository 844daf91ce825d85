#include "wincascade/policy_file.hpp"

#include "wincascade/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace wincascade {

namespace {

constexpr const char* kFormat = "wincascade-policy-1";

std::string real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || std::isnan(v))
    throw ConfigError("policy key '" + key + "': bad number '" + text + "'");
  return v;
}

}  // namespace

Task parse_task(const std::string& text) {
  if (text == "sc") return Task::SelectiveClassification;
  if (text == "ood") return Task::OodDetection;
  if (text == "scod") return Task::Scod;
  throw ConfigError("unknown task '" + text + "' (expected sc, ood or scod)");
}

ScoreKind parse_score_kind(const std::string& text) {
  if (text == "msp") return ScoreKind::NegMsp;
  if (text == "energy") return ScoreKind::Energy;
  throw ConfigError("unknown score method '" + text + "' (expected msp or energy)");
}

Combine parse_combine(const std::string& text) {
  if (text == "pred") return Combine::PredictiveDistribution;
  if (text == "member") return Combine::MemberMean;
  throw ConfigError("unknown combine rule '" + text + "' (expected pred or member)");
}

CoverageBase parse_coverage_base(const std::string& text) {
  if (text == "id") return CoverageBase::IdOnly;
  if (text == "all") return CoverageBase::AllSamples;
  throw ConfigError("unknown coverage base '" + text + "' (expected id or all)");
}

void write_policy(const CalibratedPolicy& policy, std::ostream& out) {
  out << "# wincascade exit policy\n";
  out << "format = " << kFormat << '\n';
  out << "stages = " << policy.n_stages() << '\n';
  out << "task = " << to_string(policy.point.task) << '\n';
  out << "method = " << to_string(policy.method.kind) << '\n';
  out << "combine = " << to_string(policy.method.combine) << '\n';
  out << "point = " << point_name(policy.point) << '\n';
  out << "coverage_base = " << to_string(policy.point.coverage_base) << '\n';
  out << "beta = " << real(policy.beta) << '\n';
  out << "window_base = " << to_string(policy.window_base) << '\n';
  for (std::size_t e = 0; e < policy.windows.size(); ++e) {
    const auto prefix = "exit." + std::to_string(e + 1) + ".";
    out << prefix << "tau = " << real(policy.exit_taus[e]) << '\n';
    out << prefix << "half_width = " << real(policy.half_widths[e]) << '\n';
    out << prefix << "window = " << real(policy.windows[e].lower) << ',' << real(policy.windows[e].upper) << '\n';
  }
  out << "final_tau = " << real(policy.final_tau) << '\n';
}

void write_policy(const CalibratedPolicy& policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write policy file " + path.string());
  write_policy(policy, out);
}

CalibratedPolicy read_policy(std::istream& in, const std::string& source_name) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(t.substr(0, eq));
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(source_name + ": missing key '" + key + "'");
    return it->second;
  };
  if (get("format") != kFormat) throw ConfigError(source_name + ": unsupported policy format '" + get("format") + "'");

  CalibratedPolicy policy;
  const auto stages = static_cast<Index>(parse_real("stages", get("stages")));
  if (stages < 1) throw ConfigError(source_name + ": stages must be >= 1");
  const auto task = parse_task(get("task"));
  policy.method = {parse_score_kind(get("method")), parse_combine(get("combine"))};
  validate(policy.method);
  policy.point = parse_point(task, get("point"), parse_coverage_base(get("coverage_base")));
  policy.beta = parse_real("beta", get("beta"));
  if (!(policy.beta >= 0.0)) throw ConfigError(source_name + ": beta must be >= 0");
  policy.window_base = parse_window_base(get("window_base"));
  for (Index e = 1; e < stages; ++e) {
    const auto prefix = "exit." + std::to_string(e) + ".";
    policy.exit_taus.push_back(parse_real(prefix + "tau", get(prefix + "tau")));
    policy.half_widths.push_back(parse_real(prefix + "half_width", get(prefix + "half_width")));
    const auto& w = get(prefix + "window");
    const auto comma = w.find(',');
    if (comma == std::string::npos) throw ConfigError(source_name + ": " + prefix + "window needs lower,upper");
    const Window window{parse_real(prefix + "window", trim(w.substr(0, comma))),
                        parse_real(prefix + "window", trim(w.substr(comma + 1)))};
    if (window.lower > window.upper) throw ConfigError(source_name + ": " + prefix + "window has lower > upper");
    policy.windows.push_back(window);
  }
  policy.final_tau = parse_real("final_tau", get("final_tau"));
  policy.point.tau = policy.final_tau;
  return policy;
}

CalibratedPolicy read_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file " + path.string());
  return read_policy(in, path.string());
}

}  // namespace wincascade
