#include "wincascade/error.hpp"
#include "wincascade/score_table.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace wincascade {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct CsvRow {
  std::int64_t sample = 0;
  std::int64_t stage = 0;
  std::size_t line = 0;
  int label = 0;
  Domain domain = Domain::InDistribution;
  std::vector<float> logits;
};

class ErrorList {
 public:
  explicit ErrorList(std::string source) : source_(std::move(source)) {}
  void add(std::size_t line, const std::string& msg) {
    ++count_;
    if (count_ <= kMaxShown) text_ << "\n  " << source_ << ":" << line << ": " << msg;
  }
  void add(const std::string& msg) {
    ++count_;
    if (count_ <= kMaxShown) text_ << "\n  " << source_ << ": " << msg;
  }
  void throw_if_any() const {
    if (count_ == 0) return;
    std::ostringstream os;
    os << "CSV ingestion failed with " << count_ << " error(s):" << text_.str();
    if (count_ > kMaxShown) os << "\n  ... " << (count_ - kMaxShown) << " more";
    throw DataError(os.str());
  }

 private:
  static constexpr std::size_t kMaxShown = 20;
  std::string source_;
  std::ostringstream text_;
  std::size_t count_ = 0;
};

Eigen::VectorXd parse_cost_list(std::string_view text, ErrorList& errors, std::size_t line) {
  std::vector<double> costs;
  for (auto field : split_commas(text)) {
    double c = 0;
    if (!parse_number(field, c)) {
      errors.add(line, "bad stage_cost entry '" + std::string(field) + "'");
      return {};
    }
    costs.push_back(c);
  }
  return Eigen::Map<Eigen::VectorXd>(costs.data(), static_cast<Index>(costs.size()));
}

}  // namespace

ScoreTable ingest_csv(std::istream& in, const std::string& source_name) {
  ErrorList errors(source_name);
  std::string raw;
  std::size_t line_no = 0;
  std::optional<Eigen::VectorXd> costs;
  std::size_t width = 0;  // number of logit columns, 0 until the header is read
  std::vector<CsvRow> rows;

  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view key = "stage_cost:";
      const auto body = trim(line.substr(1));
      if (body.substr(0, key.size()) == key) costs = parse_cost_list(trim(body.substr(key.size())), errors, line_no);
      continue;
    }
    const auto fields = split_commas(line);
    if (width == 0) {
      const std::array<std::string_view, 4> fixed{"sample_id", "label", "domain", "stage"};
      bool ok = fields.size() >= 6;
      for (std::size_t i = 0; ok && i < fixed.size(); ++i) ok = fields[i] == fixed[i];
      for (std::size_t i = 4; ok && i < fields.size(); ++i) ok = fields[i] == "logit_" + std::to_string(i - 4);
      if (!ok) {
        errors.add(line_no, "header must be sample_id,label,domain,stage,logit_0..logit_{K-1} with K >= 2");
        errors.throw_if_any();
      }
      width = fields.size() - 4;
      continue;
    }
    if (fields.size() != width + 4) {
      errors.add(line_no, "ragged row: expected " + std::to_string(width) + " logits, found " +
                              std::to_string(static_cast<long>(fields.size()) - 4));
      continue;
    }
    CsvRow row;
    row.line = line_no;
    row.logits.resize(width);
    if (!parse_number(fields[0], row.sample)) errors.add(line_no, "bad sample_id '" + std::string(fields[0]) + "'");
    if (!parse_number(fields[1], row.label)) errors.add(line_no, "bad label '" + std::string(fields[1]) + "'");
    const auto tag = lower(fields[2]);
    if (tag == "id") {
      row.domain = Domain::InDistribution;
    } else if (tag == "ood") {
      row.domain = Domain::OutOfDistribution;
    } else {
      errors.add(line_no, "unknown domain tag '" + std::string(fields[2]) + "' (expected id or ood)");
    }
    if (!parse_number(fields[3], row.stage)) errors.add(line_no, "bad stage '" + std::string(fields[3]) + "'");
    for (std::size_t k = 0; k < width; ++k) {
      float v = 0;
      if (!parse_number(fields[4 + k], v)) {
        errors.add(line_no, "bad logit_" + std::to_string(k) + " '" + std::string(fields[4 + k]) + "'");
      } else if (!std::isfinite(v)) {
        errors.add(line_no, "non-finite logit_" + std::to_string(k) + " '" + std::string(fields[4 + k]) + "'");
      }
      row.logits[k] = v;
    }
    rows.push_back(std::move(row));
  }
  if (width == 0) errors.add("missing header");
  errors.throw_if_any();
  if (rows.empty()) {
    errors.add("no data rows");
    errors.throw_if_any();
  }

  std::map<std::int64_t, Index> sample_index;
  std::map<std::int64_t, Index> stage_index;
  for (const auto& r : rows) {
    sample_index.emplace(r.sample, 0);
    stage_index.emplace(r.stage, 0);
  }
  Index next = 0;
  for (auto& [id, idx] : sample_index) idx = next++;
  next = 0;
  for (auto& [id, idx] : stage_index) idx = next++;

  const auto n = static_cast<Index>(sample_index.size());
  const auto m = static_cast<Index>(stage_index.size());
  const auto k = static_cast<Index>(width);
  std::vector<LogitMatrix> logits(static_cast<std::size_t>(m), LogitMatrix::Zero(n, k));
  std::vector<std::size_t> seen(static_cast<std::size_t>(n * m), 0);  // line number of the filling row
  Eigen::VectorXi labels = Eigen::VectorXi::Zero(n);
  std::vector<Domain> domain(static_cast<std::size_t>(n), Domain::InDistribution);
  std::vector<std::size_t> first_line(static_cast<std::size_t>(n), 0);

  for (const auto& r : rows) {
    const Index i = sample_index[r.sample];
    const Index s = stage_index[r.stage];
    auto& slot = seen[static_cast<std::size_t>(i * m + s)];
    if (slot != 0) {
      errors.add(r.line, "duplicate (sample,stage) = (" + std::to_string(r.sample) + "," + std::to_string(r.stage) +
                             "), first seen on line " + std::to_string(slot));
      continue;
    }
    slot = r.line;
    auto& first = first_line[static_cast<std::size_t>(i)];
    if (first == 0) {
      first = r.line;
      labels[i] = r.label;
      domain[static_cast<std::size_t>(i)] = r.domain;
    } else if (labels[i] != r.label || domain[static_cast<std::size_t>(i)] != r.domain) {
      errors.add(r.line, "label/domain of sample " + std::to_string(r.sample) + " disagrees with line " +
                             std::to_string(first));
    }
    for (Index c = 0; c < k; ++c) logits[static_cast<std::size_t>(s)](i, c) = r.logits[static_cast<std::size_t>(c)];
    if (r.domain == Domain::OutOfDistribution && r.label != kOodLabel)
      errors.add(r.line, "OOD sample must have label -1");
    if (r.domain == Domain::InDistribution && (r.label < 0 || r.label >= k))
      errors.add(r.line, "ID label " + std::to_string(r.label) + " outside [0, " + std::to_string(k) + ")");
  }
  for (const auto& [sid, i] : sample_index) {
    for (const auto& [stg, s] : stage_index) {
      if (seen[static_cast<std::size_t>(i * m + s)] == 0)
        errors.add("missing (sample,stage) = (" + std::to_string(sid) + "," + std::to_string(stg) + ")");
    }
  }
  Eigen::VectorXd stage_cost = Eigen::VectorXd::Ones(m);
  if (costs) {
    if (costs->size() != m)
      errors.add("stage_cost comment lists " + std::to_string(costs->size()) + " entries for " + std::to_string(m) +
                 " stages");
    else
      stage_cost = *costs;
  }
  errors.throw_if_any();
  return ScoreTable(std::move(logits), std::move(labels), std::move(domain), std::move(stage_cost),
                    {{"source", source_name}});
}

ScoreTable ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ingest_csv(in, path.string());
}

void write_csv(const ScoreTable& table, std::ostream& out) {
  out << "# stage_cost: ";
  for (Index m = 0; m < table.n_stages(); ++m)
    out << (m ? "," : "") << std::setprecision(17) << table.stage_cost()[m];
  out << "\nsample_id,label,domain,stage";
  for (Index k = 0; k < table.n_classes(); ++k) out << ",logit_" << k;
  out << '\n';
  // max_digits10 keeps every f32 exactly recoverable.
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (Index i = 0; i < table.n_samples(); ++i) {
    for (Index m = 0; m < table.n_stages(); ++m) {
      out << i << ',' << table.labels()[i] << ',' << (table.is_ood(i) ? "ood" : "id") << ',' << m;
      for (Index k = 0; k < table.n_classes(); ++k) out << ',' << table.stage(m)(i, k);
      out << '\n';
    }
  }
}

void write_csv(const ScoreTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(table, out);
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'U', 'Q', 'C', '1'};
constexpr std::size_t kHeaderSize = 20;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    const auto bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(U); ++b) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    if (pos_ + sizeof(U) > bytes_.size()) throw DataError("UQC1: truncated payload");
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + b]) << (8 * b));
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const auto len = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_binary(const ScoreTable& table) {
  const auto limit = static_cast<Index>(std::numeric_limits<std::uint32_t>::max());
  if (table.n_samples() > limit || table.n_classes() > limit || table.n_stages() > limit)
    throw DataError("UQC1: table dimensions exceed u32");
  ByteWriter w;
  for (auto c : kMagic) w.put(c);
  w.put(kUqcVersion);
  w.put(static_cast<std::uint32_t>(table.n_samples()));
  w.put(static_cast<std::uint32_t>(table.n_classes()));
  w.put(static_cast<std::uint32_t>(table.n_stages()));
  for (Index i = 0; i < table.n_samples(); ++i) w.put(static_cast<std::int32_t>(table.labels()[i]));
  for (const auto d : table.domain()) w.put(static_cast<std::uint8_t>(d));
  for (Index m = 0; m < table.n_stages(); ++m) w.put(table.stage_cost()[m]);
  for (const auto& s : table.stages())
    for (Index i = 0; i < s.size(); ++i) w.put(s.data()[i]);
  auto& bytes = w.bytes();
  const auto crc = crc32_of(std::span(bytes).subspan(kHeaderSize));
  w.put(crc);
  return std::move(bytes);
}

ScoreTable decode_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw DataError("UQC1: bad magic");
  ByteReader r(bytes);
  for (std::size_t i = 0; i < kMagic.size(); ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kUqcVersion)
    throw DataError("UQC1: version mismatch (file " + std::to_string(version) + ", reader " +
                    std::to_string(kUqcVersion) + ")");
  const auto n = static_cast<Index>(r.get<std::uint32_t>());
  const auto k = static_cast<Index>(r.get<std::uint32_t>());
  const auto m = static_cast<Index>(r.get<std::uint32_t>());
  const auto payload = static_cast<std::uint64_t>(n) * 4 + static_cast<std::uint64_t>(n) +
                       static_cast<std::uint64_t>(m) * 8 + static_cast<std::uint64_t>(m) * n * k * 4;
  if (bytes.size() < kHeaderSize + payload + 4) throw DataError("UQC1: truncated payload");
  if (bytes.size() > kHeaderSize + payload + 4) throw DataError("UQC1: trailing bytes after checksum");
  const auto expected = crc32_of(bytes.subspan(kHeaderSize, payload));

  Eigen::VectorXi labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = r.get<std::int32_t>();
  std::vector<Domain> domain(static_cast<std::size_t>(n));
  for (auto& d : domain) {
    const auto raw = r.get<std::uint8_t>();
    if (raw > 1) throw DataError("UQC1: domain flag " + std::to_string(raw) + " is neither 0 (ID) nor 1 (OOD)");
    d = static_cast<Domain>(raw);
  }
  Eigen::VectorXd costs(m);
  for (Index s = 0; s < m; ++s) costs[s] = r.get<double>();
  std::vector<LogitMatrix> logits;
  for (Index s = 0; s < m; ++s) {
    LogitMatrix mat(n, k);
    for (Index i = 0; i < mat.size(); ++i) mat.data()[i] = r.get<float>();
    logits.push_back(std::move(mat));
  }
  if (r.get<std::uint32_t>() != expected) throw DataError("UQC1: checksum failure");
  return ScoreTable(std::move(logits), std::move(labels), std::move(domain), std::move(costs));
}

void write_binary(const ScoreTable& table, const std::filesystem::path& path) {
  const auto bytes = encode_binary(table);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ScoreTable read_binary(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  auto table = decode_binary(bytes);
  return table.with_meta({{"source", path.string()}});
}

ScoreTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 4 && std::equal(kMagic.begin(), kMagic.end(), head.begin(),
                                                     [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); });
  in.close();
  return binary ? read_binary(path) : ingest_csv(path);
}

}  // namespace wincascade
