#pragma once

#include "psgld/core/types.hpp"

#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace psgld {

struct GradientEvent {
  std::int64_t k = 0;
  ParamVector theta;
  ParamVector noisy_grad;
  bool reinit = false;
  bool terminal = false;
};

// Single-producer source of forward-learner emissions. Returns nullopt once
// the terminal event has been delivered.
class ForwardStream {
 public:
  virtual ~ForwardStream() = default;
  virtual std::optional<GradientEvent> next() = 0;
};

using ForwardFactory = std::function<std::unique_ptr<ForwardStream>(std::uint64_t stream_index)>;

class ReplayStream : public ForwardStream {
 public:
  explicit ReplayStream(std::vector<GradientEvent> events) : events_(std::move(events)) {}
  std::optional<GradientEvent> next() override {
    if (pos_ >= events_.size()) return std::nullopt;
    return events_[pos_++];
  }

 private:
  std::vector<GradientEvent> events_;
  std::size_t pos_ = 0;
};

inline std::vector<GradientEvent> collect(ForwardStream& s) {
  std::vector<GradientEvent> out;
  while (auto e = s.next()) out.push_back(std::move(*e));
  return out;
}

// (θ_prev − θ_next)/η: the gradient actually applied by a descent step.
inline ParamVector gradient_recovery(const ParamVector& theta_prev, const ParamVector& theta_next,
                                     double eta) {
  if (!(eta > 0.0)) throw Error("gradient_recovery: eta must be > 0");
  return (theta_prev - theta_next) / eta;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_events_csv(std::ostream& os, const std::vector<GradientEvent>& events, int dim) {
  os << "k";
  for (int i = 0; i < dim; ++i) os << ",theta_" << i;
  for (int i = 0; i < dim; ++i) os << ",grad_" << i;
  os << ",reinit,terminal\n";
  for (const auto& e : events) {
    os << e.k;
    for (int i = 0; i < dim; ++i) os << ',' << format_double(e.theta[i]);
    for (int i = 0; i < dim; ++i) os << ',' << format_double(e.noisy_grad[i]);
    os << ',' << (e.reinit ? 1 : 0) << ',' << (e.terminal ? 1 : 0) << '\n';
  }
}

inline std::vector<GradientEvent> read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("events csv: missing header");
  std::size_t cols = 1;
  for (char c : line) cols += (c == ',');
  if (cols < 5 || (cols - 3) % 2 != 0) throw Error("events csv: malformed header");
  const int dim = static_cast<int>((cols - 3) / 2);
  std::vector<GradientEvent> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != cols) throw Error("events csv: wrong field count on line " + std::to_string(lineno));
    GradientEvent e;
    e.k = std::stoll(f[0]);
    e.theta.resize(dim);
    e.noisy_grad.resize(dim);
    for (int i = 0; i < dim; ++i) {
      e.theta[i] = std::stod(f[1 + i]);
      e.noisy_grad[i] = std::stod(f[1 + dim + i]);
    }
    e.reinit = f[cols - 2] == "1";
    e.terminal = f[cols - 1] == "1";
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace psgld
