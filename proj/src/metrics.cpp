#include "npf/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace npf {

WeightedSample WeightedSample::uniform(std::vector<ParameterVector> points) {
  const double w = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
  std::vector<double> weights(points.size(), w);
  return {std::move(points), std::move(weights)};
}

WeightedSample PosteriorSnapshot::resampled() const {
  std::vector<ParameterVector> pts;
  pts.reserve(ancestors.size());
  for (std::size_t a : ancestors) pts.push_back(posterior.points[a]);
  return WeightedSample::uniform(std::move(pts));
}

std::vector<double> PosteriorSnapshot::state_estimate() const {
  std::vector<double> est(state_dim, 0.0);
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    for (std::size_t d = 0; d < state_dim; ++d) {
      est[d] += posterior.weights[i] * state_means[i * state_dim + d];
    }
  }
  return est;
}

ParameterVector posterior_mean(const WeightedSample& sample) {
  if (sample.size() == 0) throw InvalidInput("posterior_mean: empty sample");
  std::vector<double> mean(sample.points.front().size(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += sample.weights[i] * sample.points[i][k];
    }
  }
  return ParameterVector(std::move(mean));
}

std::vector<double> nstd(const WeightedSample& sample, const ParameterVector& truth) {
  for (double v : truth) {
    if (v == 0.0) throw InvalidInput("nstd: true parameter has a zero coordinate");
  }
  const ParameterVector mean = posterior_mean(sample);
  if (mean.size() != truth.size()) throw InvalidInput("nstd: dimension mismatch");
  std::vector<double> out(truth.size(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double d = sample.points[i][k] - mean[k];
      out[k] += sample.weights[i] * d * d;
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::sqrt(out[k]) / std::abs(truth[k]);
  return out;
}

double ess(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return 1.0 / sq;
}

OmegaSet::OmegaSet(std::vector<TestFunction> functions) : functions_(std::move(functions)) {
  if (functions_.empty()) throw InvalidInput("OmegaSet: need at least one test function");
}

OmegaSet OmegaSet::default_for_box(const ParameterBox& box, std::size_t max_functions) {
  const auto mid = box.midpoint();
  const auto half = box.half_width();
  auto coord = [mid, half](std::size_t k) {
    return [mid, half, k](const ParameterVector& theta) {
      return std::clamp((theta[k] - mid[k]) / half[k], -1.0, 1.0);
    };
  };
  std::vector<TestFunction> fs;
  for (std::size_t k = 0; k < box.dim() && fs.size() < max_functions; ++k) {
    fs.emplace_back(coord(k));
  }
  for (std::size_t k = 0; k < box.dim(); ++k) {
    for (std::size_t l = k; l < box.dim() && fs.size() < max_functions; ++l) {
      fs.emplace_back([ck = coord(k), cl = coord(l)](const ParameterVector& theta) {
        return ck(theta) * cl(theta);
      });
    }
  }
  return OmegaSet(std::move(fs));
}

double OmegaSet::weight(std::size_t i) const { return std::ldexp(1.0, -static_cast<int>(i + 1)); }

double OmegaSet::integrate(std::size_t i, const WeightedSample& sample) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < sample.size(); ++j) {
    acc += sample.weights[j] * functions_[i](sample.points[j]);
  }
  return acc;
}

double d_omega(const WeightedSample& a, const WeightedSample& b, const OmegaSet& omega) {
  double d = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    d += omega.weight(i) * std::abs(omega.integrate(i, a) - omega.integrate(i, b));
  }
  return d;
}

RateFit fit_rate(std::span<const std::pair<double, double>> errors) {
  std::vector<double> xs, ys;
  for (const auto& [n, e] : errors) {
    if (!(e > 0.0)) throw InvalidInput("fit_rate: errors must be positive");
    if (!(n > 0.0)) throw InvalidInput("fit_rate: sample sizes must be positive");
    xs.push_back(std::log(n));
    ys.push_back(std::log(e));
  }
  auto distinct = xs;
  std::ranges::sort(distinct);
  const auto unique_end = std::unique(distinct.begin(), distinct.end());
  if (std::distance(distinct.begin(), unique_end) < 3) {
    throw InvalidInput("fit_rate: need at least three distinct sample sizes");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void RunTrace::write_csv(std::ostream& out, std::span<const std::string> header_lines) const {
  for (const auto& line : header_lines) out << "# " << line << '\n';
  auto pname = [this](std::size_t k) {
    return k < param_names.size() ? param_names[k] : "theta" + std::to_string(k + 1);
  };
  out << "step,time";
  for (std::size_t k = 0; k < param_dim; ++k) out << ",mean_" << pname(k);
  if (has_nstd) {
    for (std::size_t k = 0; k < param_dim; ++k) out << ",nstd_" << pname(k);
  }
  if (has_state_error) {
    for (std::size_t d = 0; d < state_dim; ++d) out << ",err_x" << d + 1;
  }
  out << ",ess,log_evidence_increment";
  if (has_d_omega) out << ",d_omega";
  for (const auto& c : extra_columns) out << ',' << c;
  out << '\n';
  for (const auto& r : records) {
    out << r.step << ',' << format_double(r.time);
    for (double v : r.theta_hat) out << ',' << format_double(v);
    if (has_nstd) {
      for (double v : r.nstd) out << ',' << format_double(v);
    }
    if (has_state_error) {
      if (r.state_error.empty()) {
        for (std::size_t d = 0; d < state_dim; ++d) out << ',';
      } else {
        for (double v : r.state_error) out << ',' << format_double(v);
      }
    }
    out << ',' << format_double(r.ess) << ',' << format_double(r.log_evidence_increment);
    if (has_d_omega) out << ',' << (r.d_omega ? format_double(*r.d_omega) : "");
    for (double v : r.extra) out << ',' << format_double(v);
    out << '\n';
  }
}

nlohmann::json RunTrace::summary() const {
  nlohmann::json j;
  j["records"] = records.size();
  if (records.empty()) return j;
  const auto& last = records.back();
  j["final_step"] = last.step;
  j["final_time"] = last.time;
  j["final_theta_hat"] = last.theta_hat;
  if (has_nstd && records.size() > 1) {
    std::vector<double> avg(param_dim, 0.0);
    for (std::size_t r = 1; r < records.size(); ++r) {
      for (std::size_t k = 0; k < param_dim; ++k) avg[k] += records[r].nstd[k];
    }
    for (auto& v : avg) v /= static_cast<double>(records.size() - 1);
    j["time_averaged_nstd"] = avg;
  }
  double log_evidence = 0.0;
  for (const auto& r : records) log_evidence += r.log_evidence_increment;
  j["log_evidence"] = log_evidence;
  return j;
}

}  // namespace npf
