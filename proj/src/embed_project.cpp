#include "xcorpus/embed_project.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "xcorpus/error.hpp"
#include "xcorpus/parallel.hpp"
#include "xcorpus/rng.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::embed {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (start < i) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw Error("line " + std::to_string(line_no) + ": bad number \"" + std::string(text) + "\"");
  return v;
}

}  // namespace

EmbeddingLoad load_embeddings(std::istream& in, const std::set<std::string>& words) {
  EmbeddingLoad result;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (!have_header) {
      std::size_t count = 0, dim = 0;
      if (fields.size() != 2 ||
          std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), count).ec != std::errc() ||
          std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), dim).ec != std::errc())
        throw Error("line " + std::to_string(line_no) + ": expected header \"count dim\"");
      if (dim < 2) throw Error("embedding dimension must be at least 2");
      result.table.dim = dim;
      have_header = true;
      continue;
    }
    const std::size_t values = fields.size() - 1;
    if (values != result.table.dim)
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(result.table.dim) + " values, found " + std::to_string(values));
    const std::string word(fields[0]);
    if (!words.contains(word) || result.table.vectors.contains(word)) continue;
    std::vector<double> v(values);
    for (std::size_t k = 0; k < values; ++k) v[k] = parse_double(fields[k + 1], line_no);
    result.table.vectors.emplace(word, std::move(v));
  }
  if (!have_header) throw Error("embedding file is empty");
  for (const auto& w : words)
    if (!result.table.vectors.contains(w)) result.missing.push_back(w);
  return result;
}

EmbeddingLoad load_embeddings(const std::filesystem::path& path, const std::set<std::string>& words) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file " + path.string());
  try {
    return load_embeddings(in, words);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kPerplexityTolerance = 1e-5;  // bits
constexpr int kMaxBisectionSteps = 50;

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return sum;
}

// Conditional row i of P for squared distances `dist` (dist[i] ignored).
void conditional_row(std::span<const double> dist, std::size_t i, double perplexity,
                     std::span<double> row) {
  const std::size_t n = dist.size();
  double dmin = std::numeric_limits<double>::infinity();
  double dsum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    dmin = std::min(dmin, dist[j]);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) dsum += dist[j] - dmin;
  const double target_bits = std::log2(perplexity);
  double beta = dsum > 0.0 ? static_cast<double>(n - 1) / dsum : 1.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        row[j] = 0.0;
        continue;
      }
      const double shifted = dist[j] - dmin;
      row[j] = std::exp(-beta * shifted);
      sum += row[j];
      weighted += row[j] * shifted;
    }
    const double entropy_bits = (beta * weighted / sum + std::log(sum)) / std::numbers::ln2;
    for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    const double diff = entropy_bits - target_bits;
    if (std::abs(diff) < kPerplexityTolerance) break;
    if (diff > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
    }
  }
}

}  // namespace

SquareMatrix pairwise_affinities(const std::vector<std::vector<double>>& input, double perplexity,
                                 std::uint64_t seed, std::vector<std::string>* warnings) {
  const std::size_t n = input.size();
  if (n < 4) throw Error("t-SNE needs at least 4 points, got " + std::to_string(n));
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n - 1) / 3.0))
    throw Error("perplexity " + format_exact(perplexity) + " outside (1, " +
                format_exact(static_cast<double>(n - 1) / 3.0) + ") for " + std::to_string(n) +
                " points");
  const std::size_t dim = input.front().size();
  for (const auto& p : input)
    if (p.size() != dim) throw Error("t-SNE input points differ in dimension");

  std::vector<std::vector<double>> points = input;
  {
    // Later members of an exact-duplicate group get jitter.
    std::map<std::vector<double>, std::size_t> first_seen;
    Rng rng(derive_seed(seed, "tsne-jitter"));
    std::size_t jittered = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (first_seen.emplace(input[i], i).second) continue;
      for (auto& x : points[i]) x += 1e-12 * rng.normal();
      ++jittered;
    }
    if (jittered > 0 && warnings)
      warnings->push_back(std::to_string(jittered) + " duplicate input point(s) jittered by 1e-12");
  }

  SquareMatrix dist{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = squared_distance(points[i], points[j]);

  SquareMatrix cond{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    conditional_row(std::span(dist.values).subspan(i * n, n), i, perplexity,
                    std::span(cond.values).subspan(i * n, n));

  SquareMatrix p{n, std::vector<double>(n * n, 0.0)};
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) p(i, j) = (cond(i, j) + cond(j, i)) * scale;
  return p;
}

namespace {

// Student-t kernel 1 / (1 + |yi - yj|^2), zero diagonal, and its total.
double student_kernel(std::span<const double> y, std::size_t n, std::vector<double>& num,
                      int threads) {
  num.assign(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
    }
  });
  double total = 0.0;
  for (double v : num) total += v;
  return total;
}

}  // namespace

double kl_divergence(const SquareMatrix& p, std::span<const double> coords) {
  const std::size_t n = p.n;
  std::vector<double> num;
  const double z = student_kernel(coords, n, num, 1);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p(i, j);
      if (i == j || pij <= 0.0) continue;
      const double qij = std::max(num[i * n + j] / z, std::numeric_limits<double>::min());
      kl += pij * std::log(pij / qij);
    }
  return kl;
}

void kl_gradient(const SquareMatrix& p, std::span<const double> coords, std::span<double> grad,
                 double exaggeration, int threads) {
  const std::size_t n = p.n;
  std::vector<double> num;
  const double z = student_kernel(coords, n, num, threads);
  parallel_for(n, threads, [&](std::size_t i) {
    double gx = 0.0, gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double k = num[i * n + j];
      const double mult = (exaggeration * p(i, j) - k / z) * k;
      gx += mult * (coords[2 * i] - coords[2 * j]);
      gy += mult * (coords[2 * i + 1] - coords[2 * j + 1]);
    }
    grad[2 * i] = 4.0 * gx;
    grad[2 * i + 1] = 4.0 * gy;
  });
}

Layout optimize_layout(const SquareMatrix& p, const ProjectionConfig& cfg) {
  const std::size_t n = p.n;
  Layout layout;
  layout.coords.resize(2 * n);
  Rng rng(derive_seed(cfg.seed, "tsne-init"));
  for (auto& c : layout.coords) c = 1e-4 * rng.normal();

  std::vector<double> grad(2 * n, 0.0), update(2 * n, 0.0), gains(2 * n, 1.0);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double exaggeration = iter < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
    const double momentum =
        iter < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;
    kl_gradient(p, layout.coords, grad, exaggeration, cfg.threads);
    for (double g : grad)
      if (!std::isfinite(g)) throw Error("t-SNE gradient became non-finite at iteration " + std::to_string(iter));
    for (std::size_t k = 0; k < 2 * n; ++k) {
      if (cfg.adaptive_gains) {
        gains[k] = (std::signbit(grad[k]) != std::signbit(update[k])) ? gains[k] + 0.2 : gains[k] * 0.8;
        gains[k] = std::max(gains[k], 0.01);
      }
      update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
      layout.coords[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += layout.coords[2 * i];
      my += layout.coords[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      layout.coords[2 * i] -= mx;
      layout.coords[2 * i + 1] -= my;
    }
  }
  layout.final_kl = kl_divergence(p, layout.coords);
  return layout;
}

Layout run_tsne(const std::vector<std::vector<double>>& points, const ProjectionConfig& cfg,
                std::vector<std::string>* warnings) {
  const SquareMatrix p = pairwise_affinities(points, cfg.perplexity, cfg.seed, warnings);
  return optimize_layout(p, cfg);
}

std::vector<ProjectedPoint> tsne(const EmbeddingTable& table, const ProjectionConfig& cfg,
                                 const std::vector<WordLabel>& labels,
                                 std::vector<std::string>* warnings) {
  std::vector<std::vector<double>> points;
  points.reserve(labels.size());
  for (const auto& label : labels) {
    const auto it = table.vectors.find(label.word);
    if (it == table.vectors.end()) throw Error("no embedding for word \"" + label.word + "\"");
    points.push_back(it->second);
  }
  const Layout layout = run_tsne(points, cfg, warnings);
  std::vector<ProjectedPoint> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.push_back({labels[i].word, labels[i].dataset, labels[i].cls, layout.coords[2 * i],
                   layout.coords[2 * i + 1]});
  return out;
}

void write_projection_csv(std::ostream& out, const std::vector<ProjectedPoint>& points) {
  out << "word,corpus,class,x,y\n";
  for (const auto& p : points)
    out << csv_field(p.word) << ',' << csv_field(p.dataset) << ',' << corpus::to_string(p.cls)
        << ',' << format_fixed(p.x, 6) << ',' << format_fixed(p.y, 6) << '\n';
}

}  // namespace xcorpus::embed
