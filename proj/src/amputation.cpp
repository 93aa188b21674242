#include "gcmlab/amputation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcmlab/errors.hpp"

namespace gcmlab {

std::string_view mechanism_name(Mechanism m) {
  return m == Mechanism::MAR ? "MAR" : "MNAR";
}

std::optional<Mechanism> mechanism_from_name(std::string_view name) {
  if (name == "MAR") return Mechanism::MAR;
  if (name == "MNAR") return Mechanism::MNAR;
  return std::nullopt;
}

Eigen::Index flagged_count(double rate, Eigen::Index n) {
  const double raw = rate * static_cast<double>(n);
  return static_cast<Eigen::Index>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
}

namespace {

std::vector<int> resolve_occasions(const LongData& data, const MissingSpec& spec) {
  const int occasions = static_cast<int>(data.occasions());
  std::vector<int> out = spec.affected_occasions;
  if (out.empty()) {
    for (int t = 1; t < occasions; ++t) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw ValidationError("ampute: duplicate affected occasion");
  for (int t : out) {
    if (t < 1 || t >= occasions)
      throw ValidationError("ampute: affected occasions must lie in 1..T-1 (zero-based)");
  }
  return out;
}

void check_common(const LongData& data, const MissingSpec& spec, Mechanism expected) {
  if (spec.mechanism != expected) throw ValidationError("ampute: mechanism mismatch");
  if (!(spec.rate >= 0.0 && spec.rate < 1.0))
    throw ValidationError("ampute: rate must lie in [0, 1)");
  if (!data.complete()) throw ValidationError("ampute: input data must be complete");
}

/// Cut value such that exactly `count` entries of `values` are strictly above
/// it when there are no ties. -inf flags everything, +inf nothing.
double upper_cut(std::vector<double> values, Eigen::Index count) {
  const auto n = static_cast<Eigen::Index>(values.size());
  if (count <= 0) return std::numeric_limits<double>::infinity();
  if (count >= n) return -std::numeric_limits<double>::infinity();
  auto nth = values.begin() + (n - count - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

} // namespace

LongData ampute_mar(const LongData& data, const MissingSpec& spec) {
  check_common(data, spec, Mechanism::MAR);
  const auto occasions = resolve_occasions(data, spec);
  LongData out = data;
  const Eigen::Index n = data.rows();
  const Eigen::Index count = flagged_count(spec.rate, n);
  if (count == 0) return out;

  for (int t : occasions) {
    std::vector<double> trigger(n, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (spec.mar_trigger == MarTrigger::previous_occasion) {
        if (out.mask(i, t - 1)) trigger[i] = out.y(i, t - 1);
      } else {
        for (int s = t - 1; s >= 0; --s) {
          if (out.mask(i, s)) {
            trigger[i] = out.y(i, s);
            break;
          }
        }
      }
    }
    std::vector<double> eligible;
    eligible.reserve(n);
    for (double v : trigger) {
      if (!std::isnan(v)) eligible.push_back(v);
    }
    const double cut = upper_cut(std::move(eligible), count);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isnan(trigger[i]) && trigger[i] > cut) out.mask(i, t) = false;
    }
  }
  return out;
}

LongData ampute_mnar(const LongData& data, const MissingSpec& spec) {
  check_common(data, spec, Mechanism::MNAR);
  if (!data.aux) throw ValidationError("ampute_mnar: auxiliary variable required");
  if (data.aux->size() != data.rows()) throw ValidationError("ampute_mnar: aux length mismatch");
  const auto occasions = resolve_occasions(data, spec);
  LongData out = data;
  const Eigen::Index n = data.rows();
  const Eigen::Index count = flagged_count(spec.rate, n);
  if (count == 0) return out;

  const Eigen::VectorXd& aux = *data.aux;
  const double cut = upper_cut(std::vector<double>(aux.begin(), aux.end()), count);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (aux(i) > cut) {
      for (int t : occasions) out.mask(i, t) = false;
    }
  }
  return out;
}

LongData ampute(const LongData& data, const MissingSpec& spec) {
  return spec.mechanism == Mechanism::MAR ? ampute_mar(data, spec) : ampute_mnar(data, spec);
}

} // namespace gcmlab
