#include "rcpipe/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace rcpipe::ad {

Param& ParamSet::add(const std::string& name, int rows, int cols) {
  params_.push_back(
      std::make_unique<Param>(Param{name, Mat::Zero(rows, cols), Mat::Zero(rows, cols)}));
  return *params_.back();
}

Param& ParamSet::at(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw std::out_of_range("no parameter named " + name);
}

const Param& ParamSet::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw std::out_of_range("no parameter named " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return true;
  return false;
}

void ParamSet::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

const Mat& Var::value() const { return tape->value(id); }

Var Tape::push(Mat value, std::function<void(Tape&, const Mat&)> back) {
  nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

Var Tape::leaf(Param& p) {
  Param* pp = &p;
  return push(p.value, [pp](Tape&, const Mat& g) { pp->grad += g; });
}

Var Tape::embed_rows(Param& table, const std::vector<int>& ids) {
  Mat out(static_cast<int>(ids.size()), table.value.cols());
  for (size_t i = 0; i < ids.size(); ++i) out.row(static_cast<int>(i)) = table.value.row(ids[i]);
  Param* pt = &table;
  auto ids_copy = ids;
  return push(std::move(out), [pt, ids_copy](Tape&, const Mat& g) {
    for (size_t i = 0; i < ids_copy.size(); ++i)
      pt->grad.row(ids_copy[i]) += g.row(static_cast<int>(i));
  });
}

Var Tape::add(Var a, Var b) {
  return push(a.value() + b.value(), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var Tape::sub(Var a, Var b) {
  return push(a.value() - b.value(), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, -g);
  });
}

Var Tape::mul_elem(Var a, Var b) {
  return push(a.value().cwiseProduct(b.value()), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g.cwiseProduct(b.value()));
    t.accumulate(b.id, g.cwiseProduct(a.value()));
  });
}

Var Tape::scale(Var a, double k) {
  return push(a.value() * k, [a, k](Tape& t, const Mat& g) { t.accumulate(a.id, g * k); });
}

Var Tape::matmul(Var a, Var b) {
  return push(a.value() * b.value(), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g * b.value().transpose());
    t.accumulate(b.id, a.value().transpose() * g);
  });
}

Var Tape::matmul_abt(Var a, Var b) {
  return push(a.value() * b.value().transpose(), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g * b.value());
    t.accumulate(b.id, g.transpose() * a.value());
  });
}

Var Tape::add_row_broadcast(Var x, Var bias_row) {
  Mat out = x.value();
  out.rowwise() += bias_row.value().row(0);
  return push(std::move(out), [x, bias_row](Tape& t, const Mat& g) {
    t.accumulate(x.id, g);
    t.accumulate(bias_row.id, g.colwise().sum());
  });
}

Var Tape::slice_cols(Var x, int c0, int n) {
  return push(x.value().middleCols(c0, n), [x, c0, n](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(x.value().rows(), x.value().cols());
    full.middleCols(c0, n) = g;
    t.accumulate(x.id, full);
  });
}

Var Tape::slice_rows(Var x, int r0, int n) {
  return push(x.value().middleRows(r0, n), [x, r0, n](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(x.value().rows(), x.value().cols());
    full.middleRows(r0, n) = g;
    t.accumulate(x.id, full);
  });
}

Var Tape::gather_rows(Var x, const std::vector<int>& rows) {
  Mat out(static_cast<int>(rows.size()), x.value().cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = x.value().row(rows[i]);
  auto rows_copy = rows;
  return push(std::move(out), [x, rows_copy](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(x.value().rows(), x.value().cols());
    for (size_t i = 0; i < rows_copy.size(); ++i)
      full.row(rows_copy[i]) += g.row(static_cast<int>(i));
    t.accumulate(x.id, full);
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  int rows = parts.front().rows();
  int cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Mat out(rows, cols);
  int c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  auto parts_copy = parts;
  return push(std::move(out), [parts_copy](Tape& t, const Mat& g) {
    int c = 0;
    for (const auto& p : parts_copy) {
      t.accumulate(p.id, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var Tape::row_softmax(Var x) {
  Mat out = x.value();
  for (int r = 0; r < out.rows(); ++r) {
    double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  Var result = push(std::move(out), nullptr);
  int rid = result.id;
  nodes_[rid].back = [x, rid](Tape& t, const Mat& g) {
    const Mat& y = t.value(rid);
    Mat dx(y.rows(), y.cols());
    for (int r = 0; r < y.rows(); ++r) {
      double dot = (g.row(r).array() * y.row(r).array()).sum();
      dx.row(r) = y.row(r).array() * (g.row(r).array() - dot);
    }
    t.accumulate(x.id, dx);
  };
  return result;
}

Var Tape::layer_norm(Var x, Var gain_row, Var bias_row, double eps) {
  const Mat& xv = x.value();
  int rows = static_cast<int>(xv.rows());
  int cols = static_cast<int>(xv.cols());
  Mat normed(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (int r = 0; r < rows; ++r) {
    double mean = xv.row(r).mean();
    double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normed.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Mat out = normed;
  for (int r = 0; r < rows; ++r)
    out.row(r) = out.row(r).cwiseProduct(gain_row.value().row(0)) + bias_row.value().row(0);

  auto normed_copy = std::make_shared<Mat>(std::move(normed));
  auto inv_std_copy = std::make_shared<Eigen::VectorXd>(std::move(inv_std));
  return push(std::move(out),
              [x, gain_row, bias_row, normed_copy, inv_std_copy](Tape& t, const Mat& g) {
    const Mat& nh = *normed_copy;
    int rows = static_cast<int>(nh.rows());
    int cols = static_cast<int>(nh.cols());
    Mat dgain = Mat::Zero(1, cols);
    Mat dbias = Mat::Zero(1, cols);
    Mat dx(rows, cols);
    const auto& gain = gain_row.value().row(0);
    for (int r = 0; r < rows; ++r) {
      dgain.row(0) += g.row(r).cwiseProduct(nh.row(r));
      dbias.row(0) += g.row(r);
      // d/dx of layer norm row: (I - 1/n (11^T + nh nh^T)) scaled.
      Eigen::RowVectorXd gy = g.row(r).cwiseProduct(gain);
      double mean_gy = gy.mean();
      double mean_gy_nh = (gy.array() * nh.row(r).array()).mean();
      dx.row(r) = ((gy.array() - mean_gy) - nh.row(r).array() * mean_gy_nh) * (*inv_std_copy)(r);
    }
    t.accumulate(x.id, dx);
    t.accumulate(gain_row.id, dgain);
    t.accumulate(bias_row.id, dbias);
  });
}

Var Tape::gelu(Var x) {
  // tanh approximation of gelu; smooth everywhere.
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  const Mat& xv = x.value();
  Mat out(xv.rows(), xv.cols());
  for (int i = 0; i < xv.size(); ++i) {
    double v = xv(i);
    out(i) = 0.5 * v * (1.0 + std::tanh(k * (v + 0.044715 * v * v * v)));
  }
  return push(std::move(out), [x](Tape& t, const Mat& g) {
    constexpr double k = 0.7978845608028654;
    const Mat& xv = x.value();
    Mat dx(xv.rows(), xv.cols());
    for (int i = 0; i < xv.size(); ++i) {
      double v = xv(i);
      double u = k * (v + 0.044715 * v * v * v);
      double th = std::tanh(u);
      double du = k * (1.0 + 3.0 * 0.044715 * v * v);
      dx(i) = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
    }
    t.accumulate(x.id, g.cwiseProduct(dx));
  });
}

Var Tape::relu(Var x) {
  return push(x.value().cwiseMax(0.0), [x](Tape& t, const Mat& g) {
    Mat mask = (x.value().array() > 0.0).cast<double>();
    t.accumulate(x.id, g.cwiseProduct(mask));
  });
}

Var Tape::sigmoid(Var x) {
  Mat out = x.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  Var result = push(std::move(out), nullptr);
  int rid = result.id;
  nodes_[rid].back = [x, rid](Tape& t, const Mat& g) {
    const Mat& y = t.value(rid);
    t.accumulate(x.id, g.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y)));
  };
  return result;
}

Var Tape::tanh(Var x) {
  Mat out = x.value().unaryExpr([](double v) { return std::tanh(v); });
  Var result = push(std::move(out), nullptr);
  int rid = result.id;
  nodes_[rid].back = [x, rid](Tape& t, const Mat& g) {
    const Mat& y = t.value(rid);
    Mat dx = Mat::Ones(y.rows(), y.cols()) - y.cwiseProduct(y);
    t.accumulate(x.id, g.cwiseProduct(dx));
  };
  return result;
}

Var Tape::scale_rows(Var x, int r0, int n, Var scalar) {
  Mat out = x.value();
  out.middleRows(r0, n) *= scalar.scalar();
  return push(std::move(out), [x, r0, n, scalar](Tape& t, const Mat& g) {
    Mat dx = g;
    dx.middleRows(r0, n) *= scalar.scalar();
    t.accumulate(x.id, dx);
    Mat ds(1, 1);
    ds(0, 0) = (g.middleRows(r0, n).array() * x.value().middleRows(r0, n).array()).sum();
    t.accumulate(scalar.id, ds);
  });
}

Var Tape::select(Var x, int r, int c) {
  Mat out(1, 1);
  out(0, 0) = x.value()(r, c);
  return push(std::move(out), [x, r, c](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(x.value().rows(), x.value().cols());
    full(r, c) = g(0, 0);
    t.accumulate(x.id, full);
  });
}

Var Tape::straight_through(Var z, double hard_value) {
  Mat out(1, 1);
  out(0, 0) = hard_value;
  return push(std::move(out), [z](Tape& t, const Mat& g) { t.accumulate(z.id, g); });
}

Var Tape::cross_entropy(Var logits, int target) {
  const Mat& lv = logits.value();
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(lv.data(), lv.size());
  double mx = flat.maxCoeff();
  double lse = std::log((flat.array() - mx).exp().sum()) + mx;
  Mat out(1, 1);
  out(0, 0) = lse - flat(target);
  return push(std::move(out), [logits, target, lse](Tape& t, const Mat& g) {
    const Mat& lv = logits.value();
    Mat dl(lv.rows(), lv.cols());
    for (int i = 0; i < lv.size(); ++i) dl(i) = std::exp(lv(i) - lse);
    dl(target) -= 1.0;
    t.accumulate(logits.id, g(0, 0) * dl);
  });
}

Var Tape::bce_with_logits_mean(Var logits, const std::vector<double>& targets, double eps) {
  const Mat& lv = logits.value();
  int n = static_cast<int>(lv.size());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = 1.0 / (1.0 + std::exp(-lv(i)));
    p = std::clamp(p, eps, 1.0 - eps);  // clamp keeps NaN so callers can detect it
    loss += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
  }
  Mat out(1, 1);
  out(0, 0) = loss / n;
  auto tcopy = targets;
  return push(std::move(out), [logits, tcopy, eps](Tape& t, const Mat& g) {
    const Mat& lv = logits.value();
    int n = static_cast<int>(lv.size());
    Mat dl(lv.rows(), lv.cols());
    for (int i = 0; i < n; ++i) {
      double p = 1.0 / (1.0 + std::exp(-lv(i)));
      // d/dlogit of clamped BCE; zero inside the clamp region.
      if (p <= eps || p >= 1.0 - eps) {
        dl(i) = 0.0;
      } else {
        dl(i) = (p - tcopy[i]) / n;
      }
    }
    t.accumulate(logits.id, g(0, 0) * dl);
  });
}

Var Tape::add_scaled(const std::vector<Var>& terms, const std::vector<double>& coeffs) {
  Mat out = Mat::Zero(1, 1);
  for (size_t i = 0; i < terms.size(); ++i) out(0, 0) += coeffs[i] * terms[i].scalar();
  auto terms_copy = terms;
  auto coeffs_copy = coeffs;
  return push(std::move(out), [terms_copy, coeffs_copy](Tape& t, const Mat& g) {
    for (size_t i = 0; i < terms_copy.size(); ++i)
      t.accumulate(terms_copy[i].id, g * coeffs_copy[i]);
  });
}

void Tape::backward(Var loss) {
  for (auto& n : nodes_) n.grad.resize(0, 0);
  accumulate(loss.id, Mat::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.back) continue;
    n.back(*this, n.grad);
  }
}

AdamW::AdamW(double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamW::step(ParamSet& params) {
  auto& ps = params.params();
  if (m_.empty()) {
    for (const auto& p : ps) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < ps.size(); ++i) {
    Param& p = *ps[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    if (weight_decay_ != 0.0) p.value -= lr_ * weight_decay_ * p.value;
    p.value -= lr_ * mhat.cwiseQuotient(vhat.cwiseSqrt() + Mat::Constant(vhat.rows(), vhat.cols(), eps_));
  }
}

}  // namespace rcpipe::ad
