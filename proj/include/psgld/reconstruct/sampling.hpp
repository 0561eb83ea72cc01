#pragma once

#include "psgld/core/kernel.hpp"
#include "psgld/forward/events.hpp"
#include "psgld/inverse/psgld.hpp"
#include "psgld/metrics/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace psgld {

// Axis-aligned compact box.
struct Box {
  ParamVector lo;
  ParamVector hi;

  int dim() const { return static_cast<int>(lo.size()); }

  void validate() const {
    require(lo.size() >= 1 && lo.size() == hi.size(), "box: bounds must share a positive dimension");
    require_finite(lo, "box lo");
    require_finite(hi, "box hi");
    for (int d = 0; d < dim(); ++d) require(hi[d] >= lo[d], "box: hi must be >= lo");
  }

  bool contains(const ParamVector& x) const {
    if (x.size() != lo.size()) return false;
    for (int d = 0; d < dim(); ++d)
      if (!(x[d] >= lo[d] && x[d] <= hi[d])) return false;
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (int d = 0; d < dim(); ++d) v *= hi[d] - lo[d];
    return v;
  }

  Box inflate(double margin) const {
    require(margin >= 0.0, "box: inflation margin must be >= 0");
    return Box{lo.array() - margin, hi.array() + margin};
  }

  GridSpec grid(int points_per_axis) const { return GridSpec{lo, hi, points_per_axis}; }

  bool operator==(const Box& o) const { return lo.size() == o.lo.size() && lo == o.lo && hi == o.hi; }
};

inline Box cube_box(int dim, double lo, double hi) {
  return Box{ParamVector::Constant(dim, lo), ParamVector::Constant(dim, hi)};
}

enum class ForwardMode {
  Independent,  // stream i draws its events from factory(i)
  Shared        // one forward learner; streams are separated by reinit barriers
};

struct ReconstructConfig {
  double rho = 0.0;
  std::int64_t T = 100;
  Box theta_box = cube_box(1, -2.0, 2.0);
  SmoothingKernel kde_kernel = gaussian_kernel(1);
  double b_T = 0.0;  // 0 selects T^{-1/4}
  std::int64_t k_hat = 1000;
  PsgldConfig psgld;
  ForwardMode mode = ForwardMode::Independent;
  int threads = 1;
  int grid_points = 201;

  double bandwidth() const { return b_T > 0.0 ? b_T : std::pow(static_cast<double>(T), -0.25); }

  void validate() const {
    require(T >= 1, "reconstruct: T must be >= 1");
    require(k_hat >= 0, "reconstruct: k_hat must be >= 0");
    require(b_T >= 0.0, "reconstruct: b_T must be > 0 (or 0 for the default schedule)");
    require(threads >= 1, "reconstruct: threads must be >= 1");
    require(grid_points >= 2, "reconstruct: grid_points must be >= 2");
    require(rho >= 0.0, "reconstruct: rho must be >= 0");
    theta_box.validate();
    require(theta_box.dim() == psgld.dist.dim(), "reconstruct: box and sampler dimension differ");
    require(kde_kernel.dim == theta_box.dim(), "reconstruct: KDE kernel dimension differs from box");
    validate_psgld_config(psgld);
  }
};

struct SampleSet {
  std::vector<ParamVector> samples;  // in-box α_{k̂}^i, in stream order
  std::vector<std::int64_t> stream_ids;
  std::int64_t T_attempted = 0;
  Box box;
  std::int64_t discarded_events = 0;  // consumed by the reinit barrier
  std::vector<ParamVector> all_final;  // α_{k̂}^i for every stream, in or out of Θ
};

namespace detail {

// Forward stream with a one-event pushback slot.
class PeekableStream {
 public:
  explicit PeekableStream(ForwardStream& s) : s_(s) {}
  std::optional<GradientEvent> next() {
    if (pending_) {
      auto e = std::move(pending_);
      pending_.reset();
      return e;
    }
    return s_.next();
  }
  void push_back(GradientEvent e) { pending_ = std::move(e); }

 private:
  ForwardStream& s_;
  std::optional<GradientEvent> pending_;
};

class PeekAdapter : public ForwardStream {
 public:
  explicit PeekAdapter(PeekableStream& p) : p_(p) {}
  std::optional<GradientEvent> next() override { return p_.next(); }

 private:
  PeekableStream& p_;
};

inline std::string exhausted_message(std::int64_t completed, std::int64_t T, const char* why) {
  return "run_sequential_sampling: forward stream exhausted " + std::string(why) + " after " +
         std::to_string(completed) + " of " + std::to_string(T) + " streams completed";
}

}  // namespace detail

// Runs T PSGLD streams, each to iterate k̂, keeping the final states inside Θ.
// Stream i uses rng.derive(i); in Independent mode it also owns factory(i),
// so the result does not depend on the thread count.
inline SampleSet run_sequential_sampling(const ForwardFactory& factory, const ReconstructConfig& cfg,
                                         const RandomSource& rng) {
  cfg.validate();
  require(static_cast<bool>(factory), "run_sequential_sampling: forward factory is empty");
  const auto T = cfg.T;
  std::vector<ParamVector> finals(static_cast<std::size_t>(T));
  SampleSet out;
  out.T_attempted = T;
  out.box = cfg.theta_box;

  if (cfg.mode == ForwardMode::Shared) {
    auto fwd = factory(0);
    require(fwd != nullptr, "run_sequential_sampling: factory returned null");
    detail::PeekableStream peek(*fwd);
    for (std::int64_t i = 0; i < T; ++i) {
      RandomSource r = rng.derive(static_cast<std::uint64_t>(i));
      detail::PeekAdapter adapter(peek);
      try {
        finals[static_cast<std::size_t>(i)] = run_psgld(adapter, cfg.psgld, cfg.k_hat, r).alpha;
      } catch (const StreamExhausted& e) {
        throw StreamExhausted(detail::exhausted_message(i, T, "mid-stream"), i);
      }
      if (i + 1 == T) break;
      // Wait for the forward learner to re-initialize.
      for (;;) {
        auto ev = peek.next();
        if (!ev || ev->terminal) throw StreamExhausted(detail::exhausted_message(i + 1, T, "at reinit barrier"), i + 1);
        if (ev->reinit) {
          peek.push_back(std::move(*ev));
          break;
        }
        ++out.discarded_events;
      }
    }
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(T));
    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= T) return;
        try {
          auto fwd = factory(static_cast<std::uint64_t>(i));
          require(fwd != nullptr, "run_sequential_sampling: factory returned null");
          RandomSource r = rng.derive(static_cast<std::uint64_t>(i));
          finals[static_cast<std::size_t>(i)] = run_psgld(*fwd, cfg.psgld, cfg.k_hat, r).alpha;
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    };
    const int nt = static_cast<int>(std::min<std::int64_t>(cfg.threads, T));
    if (nt <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    for (std::int64_t i = 0; i < T; ++i) {
      if (!errors[static_cast<std::size_t>(i)]) continue;
      try {
        std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
      } catch (const StreamExhausted&) {
        throw StreamExhausted(detail::exhausted_message(i, T, "mid-stream"), i);
      }
    }
  }

  for (std::int64_t i = 0; i < T; ++i) {
    const auto& a = finals[static_cast<std::size_t>(i)];
    if (cfg.theta_box.contains(a)) {
      out.samples.push_back(a);
      out.stream_ids.push_back(i);
    }
  }
  out.all_final = std::move(finals);
  return out;
}

// b_T = T^{-1/4}: b_T → 0 while T b_T² → ∞.
inline double bandwidth_schedule(std::int64_t T) {
  require(T >= 1, "bandwidth_schedule: T must be >= 1");
  return std::pow(static_cast<double>(T), -0.25);
}

}  // namespace psgld
