#include "evuas/perturbation.hpp"

#include <algorithm>
#include <cmath>

#include "evuas/errors.hpp"

namespace evuas {

namespace {

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v, double t, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw EvaluationError(std::string(what) + " is not finite at t=" + std::to_string(t),
                            static_cast<std::size_t>(i));
  }
}

}  // namespace

Perturbation Perturbation::zero(std::size_t dim) {
  Perturbation p;
  p.kind_ = Kind::kZero;
  p.dim_ = dim;
  p.flags = {true, true};
  p.name = "zero";
  return p;
}

Perturbation Perturbation::time_only(TimeSignal w) {
  Perturbation p;
  p.kind_ = Kind::kTimeOnly;
  p.dim_ = w.dim;
  p.hint_ = w.freq_hint;
  p.signal_ = std::move(w);
  return p;
}

Perturbation Perturbation::factored(std::size_t dim, MatrixSignal d, StateMap k,
                                    FrequencyHint hint) {
  Perturbation p;
  p.kind_ = Kind::kFactored;
  p.dim_ = dim;
  p.d_ = std::move(d);
  p.k_ = std::move(k);
  p.hint_ = std::move(hint);
  return p;
}

Eigen::VectorXd Perturbation::evaluate(double t, const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  accumulate(t, x, out);
  return out;
}

void Perturbation::accumulate(double t, const Eigen::VectorXd& x,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  if (static_cast<std::size_t>(out.size()) != dim_)
    throw ShapeError("perturbation output has length " + std::to_string(out.size()) +
                     ", expected " + std::to_string(dim_));
  switch (kind_) {
    case Kind::kZero:
      return;
    case Kind::kTimeOnly: {
      double buf[16];
      Eigen::VectorXd heap;
      std::span<double> w;
      if (dim_ <= 16) {
        w = std::span<double>(buf, dim_);
      } else {
        heap.resize(static_cast<Eigen::Index>(dim_));
        w = std::span<double>(heap.data(), dim_);
      }
      signal_.checked_eval(t, w);
      for (std::size_t i = 0; i < dim_; ++i) out[static_cast<Eigen::Index>(i)] += w[i];
      return;
    }
    case Kind::kFactored: {
      const Eigen::MatrixXd d = d_(t);
      const Eigen::VectorXd k = k_(x);
      if (static_cast<std::size_t>(d.rows()) != dim_ || static_cast<std::size_t>(d.cols()) != dim_ ||
          static_cast<std::size_t>(k.size()) != dim_)
        throw ShapeError("factored perturbation: D must be " + std::to_string(dim_) + "x" +
                         std::to_string(dim_) + " and K of length " + std::to_string(dim_));
      const Eigen::VectorXd w = d * k;
      check_finite(w, t, "perturbation D(t)K(x)");
      out += w;
      return;
    }
  }
}

Perturbation Perturbation::as_factored() const {
  if (kind_ == Kind::kFactored) return *this;
  const std::size_t dim = dim_;
  MatrixSignal d;
  if (kind_ == Kind::kZero) {
    d = [dim](double) {
      return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    };
  } else {
    d = [sig = signal_](double t) {
      Eigen::VectorXd w(static_cast<Eigen::Index>(sig.dim));
      sig.eval(t, std::span<double>(w.data(), sig.dim));
      return Eigen::MatrixXd(w.asDiagonal());
    };
  }
  Perturbation p = factored(
      dim, std::move(d),
      [dim](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)); },
      hint_);
  p.flags = flags;
  p.name = name;
  return p;
}

std::size_t Perturbation::column_count() const {
  switch (kind_) {
    case Kind::kZero:
    case Kind::kTimeOnly:
      return 1;
    case Kind::kFactored:
      return dim_;
  }
  return 0;
}

TimeSignal Perturbation::column(std::size_t j) const {
  if (j >= column_count()) throw ShapeError("perturbation column index out of range");
  switch (kind_) {
    case Kind::kZero:
      return TimeSignal{dim_, [](double, std::span<double> y) { std::fill(y.begin(), y.end(), 0.0); },
                        {}};
    case Kind::kTimeOnly:
      return signal_;
    case Kind::kFactored:
      return TimeSignal{dim_,
                        [d = d_, j](double t, std::span<double> y) {
                          const Eigen::MatrixXd m = d(t);
                          for (std::size_t i = 0; i < y.size(); ++i)
                            y[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                        },
                        hint_};
  }
  return {};
}

}  // namespace evuas
