#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace wincascade {

using Index = Eigen::Index;

/// Row-major N x K matrix of pre-softmax outputs for one stage.
using LogitMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Domain : std::uint8_t { InDistribution = 0, OutOfDistribution = 1 };

/// Label carried by every out-of-distribution sample.
inline constexpr int kOodLabel = -1;

/// Per-stage logits, labels, domain flags and stage costs for N samples.
///
/// Stages are ordered by execution. The table is validated on construction
/// and immutable afterwards, so it can be shared freely between readers.
class ScoreTable {
 public:
  using Meta = std::map<std::string, std::string>;

  ScoreTable(std::vector<LogitMatrix> logits, Eigen::VectorXi labels, std::vector<Domain> domain,
             Eigen::VectorXd stage_cost, Meta meta = {});

  Index n_samples() const { return labels_.size(); }
  Index n_classes() const { return logits_.front().cols(); }
  Index n_stages() const { return static_cast<Index>(logits_.size()); }

  /// Logits of stage `m` (0-based).
  const LogitMatrix& stage(Index m) const { return logits_[static_cast<std::size_t>(m)]; }
  const std::vector<LogitMatrix>& stages() const { return logits_; }
  const Eigen::VectorXi& labels() const { return labels_; }
  const std::vector<Domain>& domain() const { return domain_; }
  const Eigen::VectorXd& stage_cost() const { return stage_cost_; }
  const Meta& meta() const { return meta_; }

  bool is_ood(Index n) const { return domain_[static_cast<std::size_t>(n)] == Domain::OutOfDistribution; }
  Index count(Domain d) const;

  /// New table holding rows `rows` in the given order.
  ScoreTable select(std::span<const Index> rows) const;
  /// New table keeping only samples of domain `d` (order preserved).
  ScoreTable filter(Domain d) const;
  /// New table holding the first `count` stages.
  ScoreTable first_stages(Index count) const;
  /// Copy with a replaced meta map.
  ScoreTable with_meta(Meta meta) const;
  /// Copy with replaced stage costs.
  ScoreTable with_stage_cost(Eigen::VectorXd stage_cost) const;

  /// Exact equality of all numeric content (meta is ignored).
  friend bool operator==(const ScoreTable& a, const ScoreTable& b);

 private:
  std::vector<LogitMatrix> logits_;
  Eigen::VectorXi labels_;
  std::vector<Domain> domain_;
  Eigen::VectorXd stage_cost_;
  Meta meta_;
};

/// Concatenate two tables with matching K, M and stage costs.
ScoreTable concatenate(const ScoreTable& a, const ScoreTable& b);

// ---------------------------------------------------------------------------
// CSV: header `sample_id,label,domain,stage,logit_0..logit_{K-1}`, one row per
// (sample, stage). Samples are ordered by ascending sample_id and stages by
// ascending stage value. An optional leading `# stage_cost: c1,c2,...` line
// sets stage costs (default 1 per stage).

ScoreTable ingest_csv(std::istream& in, const std::string& source_name = "<stream>");
ScoreTable ingest_csv(const std::filesystem::path& path);
void write_csv(const ScoreTable& table, std::ostream& out);
void write_csv(const ScoreTable& table, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// UQC1 binary format, little-endian:
//   "UQC1" | u32 version | u32 N | u32 K | u32 M
//   payload: i32 labels[N] | u8 domain[N] | f64 stage_cost[M] | M x f32[N*K]
//   u32 CRC-32 of the payload bytes

inline constexpr std::uint32_t kUqcVersion = 1;

/// CRC-32 (IEEE 802.3, as used by zlib and PNG).
std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_binary(const ScoreTable& table);
ScoreTable decode_binary(std::span<const std::uint8_t> bytes);
void write_binary(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_binary(const std::filesystem::path& path);

/// Reads UQC1 when the file starts with the magic bytes, CSV otherwise.
ScoreTable read_table(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct MixtureSpec {
  double alpha = 0.5;  ///< ID fraction of the mixture
  std::uint64_t seed = 0;
};

/// Subsample an ID pool and an OOD pool into a mixture with ID fraction alpha.
///
/// The larger pool (relative to alpha) is subsampled so that both pools are
/// used as fully as possible; a note is left in meta["mixture_note"] when
/// samples were dropped. Output rows are deterministically shuffled.
ScoreTable mix_subsample(const ScoreTable& id_table, const ScoreTable& ood_table, const MixtureSpec& spec);

}  // namespace wincascade
