#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcorpus/corpus.hpp"

namespace xcorpus::embed {

struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};

struct EmbeddingLoad {
  EmbeddingTable table;
  /// Requested words absent from the file, sorted.
  std::vector<std::string> missing;
};

/**
 * Reads the text vector format: a "count dim" header then "word v1 ... vdim"
 * lines. Only requested words are kept, but every line is checked for the
 * right number of values and a mismatch throws Error with the line number.
 */
EmbeddingLoad load_embeddings(const std::filesystem::path& path, const std::set<std::string>& words);
EmbeddingLoad load_embeddings(std::istream& in, const std::set<std::string>& words);

struct ProjectionConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  /// Per-coordinate step gains (+0.2 on sign flip, x0.8 otherwise, floor 0.01).
  bool adaptive_gains = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Dense n x n row-major matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

/**
 * Joint affinities P for t-SNE. Each row's Gaussian precision is found by
 * bisection (at most 50 steps) so the conditional distribution has
 * perplexity 2^H within 1e-5 bits; P = (Pc + Pc^T) / 2n with a zero diagonal.
 * Exact duplicate points get 1e-12 Gaussian jitter from `seed` and a warning
 * is appended to `warnings` when given. Requires n >= 4 and
 * 1 < perplexity < (n - 1) / 3.
 */
SquareMatrix pairwise_affinities(const std::vector<std::vector<double>>& points, double perplexity,
                                 std::uint64_t seed = 0, std::vector<std::string>* warnings = nullptr);

/// KL(P || Q) for a 2-D layout `coords` (x0, y0, x1, y1, ...).
double kl_divergence(const SquareMatrix& p, std::span<const double> coords);

/// Gradient of KL(exaggeration * P || Q) with respect to coords.
void kl_gradient(const SquareMatrix& p, std::span<const double> coords, std::span<double> grad,
                 double exaggeration = 1.0, int threads = 1);

struct Layout {
  std::vector<double> coords;  // n x 2
  double final_kl = 0.0;
};

/// Gradient descent with momentum and early exaggeration from N(0, 1e-4) initial points.
Layout optimize_layout(const SquareMatrix& p, const ProjectionConfig& cfg);

Layout run_tsne(const std::vector<std::vector<double>>& points, const ProjectionConfig& cfg,
                std::vector<std::string>* warnings = nullptr);

struct WordLabel {
  std::string word;
  std::string dataset;
  corpus::BinaryClass cls = corpus::BinaryClass::negative;
};

struct ProjectedPoint {
  std::string word;
  std::string dataset;
  corpus::BinaryClass cls = corpus::BinaryClass::negative;
  double x = 0.0;
  double y = 0.0;
};

/// One output point per label; every labeled word must be in the table.
std::vector<ProjectedPoint> tsne(const EmbeddingTable& table, const ProjectionConfig& cfg,
                                 const std::vector<WordLabel>& labels,
                                 std::vector<std::string>* warnings = nullptr);

/// Rows word,corpus,class,x,y.
void write_projection_csv(std::ostream& out, const std::vector<ProjectedPoint>& points);

}  // namespace xcorpus::embed
