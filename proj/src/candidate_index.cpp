#include "kgalign/candidate_index.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "kgalign/error.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ptr != field.data() + field.size() ||
      (ec != std::errc{} && ec != std::errc::result_out_of_range)) {
    throw Error(ErrorKind::ParseError,
                std::string("invalid ") + what + " '" + std::string(field) + "'", line_no);
  }
  if (ec == std::errc::result_out_of_range) {
    throw Error(ErrorKind::ValueError, std::string(what) + " out of range", line_no);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<EntityId> ids,
                                 std::vector<double> values)
    : dim_(dim), ids_(std::move(ids)), values_(std::move(values)) {
  if (dim_ == 0) throw Error(ErrorKind::ShapeError, "dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw Error(ErrorKind::ShapeError, "expected " + std::to_string(ids_.size() * dim_) +
                                           " values, got " + std::to_string(values_.size()));
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::ValueError, "non-finite embedding component");
  }
  row_of_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (!row_of_.emplace(ids_[r], r).second) {
      throw Error(ErrorKind::ShapeError, "duplicate embedding for entity " +
                                             std::to_string(ids_[r]));
    }
  }
  const auto dot = simd::dot_for(simd::active_isa());
  norms_.resize(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    const double* p = values_.data() + r * dim_;
    norms_[r] = std::sqrt(dot(p, p, dim_));
  }
}

std::size_t EmbeddingMatrix::row_index(EntityId id) const {
  const auto it = row_of_.find(id);
  if (it == row_of_.end()) {
    throw Error(ErrorKind::UnknownEntity, "no embedding for entity " + std::to_string(id));
  }
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::scaled(double factor) const {
  std::vector<double> values = values_;
  for (double& v : values) v *= factor;
  return EmbeddingMatrix(dim_, ids_, std::move(values));
}

EmbeddingMatrix parse_embeddings(std::string_view contents) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  std::size_t count = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::vector<EntityId> ids;
  std::vector<double> values;

  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    const std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (!have_header) {
      if (fields.size() != 2) {
        throw Error(ErrorKind::ParseError, "expected header '<count> <dim>'", line_no);
      }
      count = parse_number<std::size_t>(fields[0], line_no, "count");
      dim = parse_number<std::size_t>(fields[1], line_no, "dim");
      if (dim == 0) throw Error(ErrorKind::ShapeError, "dimension must be positive", line_no);
      ids.reserve(count);
      values.reserve(count * dim);
      have_header = true;
      continue;
    }
    if (fields.size() != dim + 1) {
      throw Error(ErrorKind::ShapeError,
                  "expected " + std::to_string(dim) + " components, got " +
                      std::to_string(fields.size() - 1),
                  line_no);
    }
    ids.push_back(parse_number<EntityId>(fields[0], line_no, "entity id"));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double v = parse_number<double>(fields[i], line_no, "component");
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::ValueError, "non-finite component '" + std::string(fields[i]) + "'",
                    line_no);
      }
      values.push_back(v);
    }
  }
  if (!have_header) throw Error(ErrorKind::ParseError, "missing header");
  if (ids.size() != count) {
    throw Error(ErrorKind::ShapeError, "header declares " + std::to_string(count) +
                                           " rows, found " + std::to_string(ids.size()));
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(values));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file(path));
}

std::string format_embeddings(const EmbeddingMatrix& matrix) {
  std::string out = std::to_string(matrix.size()) + ' ' + std::to_string(matrix.dim()) + '\n';
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    out += std::to_string(matrix.ids()[r]);
    for (const double v : matrix.row(r)) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarity

std::vector<EntityId> CandidateSet::target_ids() const {
  std::vector<EntityId> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.target);
  return out;
}

bool CandidateSet::contains(EntityId target) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const ScoredTarget& c) { return c.target == target; });
}

double cosine(std::span<const double> a, double norm_a, std::span<const double> b,
              double norm_b) {
  const double denom = norm_a * norm_b;
  if (denom == 0.0) return 0.0;
  return simd::dot(a, b) / denom;
}

EmbeddingSimilarity::EmbeddingSimilarity(const EmbeddingMatrix& source,
                                         const EmbeddingMatrix& target, simd::Isa isa)
    : source_(&source), target_(&target), isa_(isa) {
  if (source.dim() != target.dim()) {
    throw Error(ErrorKind::ShapeError, "source dim " + std::to_string(source.dim()) +
                                           " != target dim " + std::to_string(target.dim()));
  }
}

double EmbeddingSimilarity::score(EntityId source, EntityId target) const {
  const std::size_t s = source_->row_index(source);
  const std::size_t t = target_->row_index(target);
  const double denom = source_->norms()[s] * target_->norms()[t];
  if (denom == 0.0) return 0.0;
  return simd::dot_for(isa_)(source_->row(s).data(), target_->row(t).data(), source_->dim()) /
         denom;
}

std::vector<ScoredTarget> EmbeddingSimilarity::scores_for(EntityId source) const {
  const std::size_t s = source_->row_index(source);
  const std::size_t n = target_->size();
  std::vector<double> dots(n);
  simd::dot_many_for(isa_)(source_->row(s).data(), target_->values().data(), target_->dim(), n,
                           dots.data());
  const double norm_s = source_->norms()[s];
  std::vector<ScoredTarget> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double denom = norm_s * target_->norms()[t];
    out[t] = ScoredTarget{target_->ids()[t], denom == 0.0 ? 0.0 : dots[t] / denom};
  }
  return out;
}

PrecomputedSimilarity PrecomputedSimilarity::parse(std::string_view contents) {
  PrecomputedSimilarity out;
  std::map<EntityId, std::map<EntityId, double>> rows;
  std::size_t line_no = 0;
  std::vector<EntityId> targets;
  for (const auto line : text::split(contents, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = text::split(trimmed, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorKind::ParseError, "expected 'source\\ttarget\\tscore'", line_no);
    }
    const auto s = parse_number<EntityId>(fields[0], line_no, "source id");
    const auto t = parse_number<EntityId>(fields[1], line_no, "target id");
    const auto v = parse_number<double>(text::trim(fields[2]), line_no, "score");
    if (!std::isfinite(v)) throw Error(ErrorKind::ValueError, "non-finite score", line_no);
    if (!rows[s].emplace(t, v).second) {
      throw Error(ErrorKind::DuplicateId, "pair listed twice", line_no);
    }
    targets.push_back(t);
  }
  std::sort(targets.begin(), targets.end());
  out.target_count_ =
      static_cast<std::size_t>(std::unique(targets.begin(), targets.end()) - targets.begin());
  for (auto& [s, row] : rows) {
    auto& dst = out.rows_[s];
    for (const auto& [t, v] : row) dst.push_back(ScoredTarget{t, v});
  }
  return out;
}

PrecomputedSimilarity PrecomputedSimilarity::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

double PrecomputedSimilarity::score(EntityId source, EntityId target) const {
  for (const auto& c : scores_for(source)) {
    if (c.target == target) return c.score;
  }
  throw Error(ErrorKind::UnknownEntity, "no score for pair " + std::to_string(source) + "," +
                                            std::to_string(target));
}

std::vector<ScoredTarget> PrecomputedSimilarity::scores_for(EntityId source) const {
  const auto it = rows_.find(source);
  if (it == rows_.end()) {
    throw Error(ErrorKind::UnknownEntity, "no scores for source " + std::to_string(source));
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Retrieval

std::vector<ScoredTarget> select_top(std::vector<ScoredTarget> scored, std::size_t k) {
  k = std::min(k, scored.size());
  // ranks_before is a strict total order on distinct targets, so the result is
  // exactly the first k entries of a full sort.
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    ranks_before);
  scored.resize(k);
  return scored;
}

CandidateSet top_k(EntityId source, std::size_t k, const SimilarityProvider& provider) {
  if (k == 0) throw Error(ErrorKind::ShapeError, "k must be positive");
  if (k > provider.target_count()) {
    throw Error(ErrorKind::ShapeError, "k=" + std::to_string(k) + " exceeds " +
                                           std::to_string(provider.target_count()) + " targets");
  }
  return CandidateSet{source, select_top(provider.scores_for(source), k)};
}

CandidateSet top_k(EntityId source, std::size_t k, const EmbeddingMatrix& source_matrix,
                   const EmbeddingMatrix& target_matrix) {
  return top_k(source, k, EmbeddingSimilarity(source_matrix, target_matrix));
}

RecallReport recall_at_k(std::span<const CandidateSet> sets,
                         const std::map<EntityId, EntityId>& gold) {
  RecallReport report;
  for (const auto& set : sets) {
    const auto it = gold.find(set.source);
    if (it == gold.end()) {
      report.missing_gold.push_back(set.source);
      continue;
    }
    ++report.evaluated;
    if (set.contains(it->second)) ++report.hits;
  }
  if (report.evaluated == 0) throw Error(ErrorKind::EmptyEval, "no candidate set has gold");
  report.recall = static_cast<double>(report.hits) / static_cast<double>(report.evaluated);
  return report;
}

std::string format_candidate_lines(std::span<const CandidateSet> sets) {
  std::string out;
  for (const auto& set : sets) {
    for (std::size_t r = 0; r < set.candidates.size(); ++r) {
      const auto& c = set.candidates[r];
      out += std::to_string(set.source) + '\t' + std::to_string(r + 1) + '\t' +
             std::to_string(c.target) + '\t' + format_double(c.score) + '\n';
    }
  }
  return out;
}

}  // namespace kgalign
