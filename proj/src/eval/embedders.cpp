#include <algorithm>
#include <cmath>
#include <random>

#include "clarify/eval.hpp"
#include "clarify/text.hpp"

namespace clarify::eval {

namespace {

void normalize(Vector& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

// Mean over `from` of the best cosine against any vector in `to`.
double mean_best(const std::vector<Vector>& from, const std::vector<Vector>& to) {
  double sum = 0.0;
  for (const auto& f : from) {
    double best = -1.0;
    for (const auto& t : to) best = std::max(best, cosine(f, t));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "vectors differ in dimension");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

HashedProjectionEmbedder::HashedProjectionEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::vector<Vector> HashedProjectionEmbedder::embed(const std::vector<std::string>& tokens) const {
  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    // Raw engine output only: std distributions are not portable bit-for-bit.
    std::mt19937_64 rng(fnv1a64(t) ^ seed_);
    Vector v(dim_);
    for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

OneHotHashEmbedder::OneHotHashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::size_t OneHotHashEmbedder::bucket(const std::string& token) const { return fnv1a64(token) % dim_; }

std::vector<Vector> OneHotHashEmbedder::embed(const std::vector<std::string>& tokens) const {
  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    Vector v(dim_, 0.0);
    v[bucket(t)] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

TableEmbedder::TableEmbedder(std::unordered_map<std::string, Vector> table) : table_(std::move(table)) {
  std::size_t dim = 0;
  for (const auto& [token, v] : table_) {
    if (v.empty()) fail(ErrorCode::InvalidArgument, "empty vector for token '" + token + "'");
    if (dim != 0 && v.size() != dim) fail(ErrorCode::InvalidArgument, "table vectors differ in dimension");
    dim = v.size();
  }
}

std::vector<Vector> TableEmbedder::embed(const std::vector<std::string>& tokens) const {
  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = table_.find(t);
    if (it == table_.end()) fail(ErrorCode::EmbedderUnavailable, "no vector for token '" + t + "'");
    out.push_back(it->second);
  }
  return out;
}

SimilarityScore similarity_detail(std::string_view candidate, std::string_view reference, const Embedder& embedder) {
  const auto c = text::words(candidate);
  const auto r = text::words(reference);
  if (c.empty() || r.empty()) return {};
  const auto cv = embedder.embed(c);
  const auto rv = embedder.embed(r);
  if (cv.size() != c.size() || rv.size() != r.size()) {
    fail(ErrorCode::EmbedderUnavailable, embedder.name() + " returned the wrong number of vectors");
  }
  SimilarityScore s;
  s.precision = mean_best(cv, rv);
  s.recall = mean_best(rv, cv);
  s.f1 = std::clamp(harmonic_mean(s.precision, s.recall), -1.0, 1.0);
  return s;
}

double similarity(std::string_view candidate, std::string_view reference, const Embedder& embedder) {
  return similarity_detail(candidate, reference, embedder).f1;
}

}  // namespace clarify::eval
