#include "abrlab/diff.hpp"

#include <algorithm>
#include <cmath>

namespace abrlab {

int ParamLayout::add(std::string name, int rows, int cols, Net net, int expert) {
  if (rows < 1 || cols < 1) throw ShapeMismatch("segment dims must be positive: " + name);
  if (index_of(name) >= 0) throw std::invalid_argument("duplicate segment name: " + name);
  SegmentSpec s;
  s.name = std::move(name);
  s.rows = rows;
  s.cols = cols;
  s.net = net;
  s.expert = expert;
  s.offset = total_;
  total_ += s.size();
  segs_.push_back(std::move(s));
  return static_cast<int>(segs_.size()) - 1;
}

int ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segs_.size(); ++i) {
    if (segs_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::span<double> ParamSet::seg(int id) {
  const SegmentSpec& s = layout_->seg(id);
  return {flat_.data() + s.offset, static_cast<std::size_t>(s.size())};
}
std::span<const double> ParamSet::seg(int id) const {
  const SegmentSpec& s = layout_->seg(id);
  return {flat_.data() + s.offset, static_cast<std::size_t>(s.size())};
}
std::span<double> Gradient::seg(int id) {
  const SegmentSpec& s = layout->seg(id);
  return {flat.data() + s.offset, static_cast<std::size_t>(s.size())};
}
std::span<const double> Gradient::seg(int id) const {
  const SegmentSpec& s = layout->seg(id);
  return {flat.data() + s.offset, static_cast<std::size_t>(s.size())};
}

std::vector<double> gaussian_vector(RngStream& rng, long len) {
  std::vector<double> v(static_cast<std::size_t>(len));
  for (double& x : v) x = rng.normal();
  return v;
}

void Tape::reset(const ParamSet& params) {
  params_ = &params;
  clear();
}

void Tape::clear() {
  nodes_.clear();
  arena_.clear();
  aux_.clear();
}

int Tape::push(Node n, int len) {
  n.val_off = static_cast<long>(arena_.size());
  n.len = len;
  arena_.resize(arena_.size() + static_cast<std::size_t>(len), 0.0);
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

std::span<double> Tape::val(int id) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {arena_.data() + n.val_off, static_cast<std::size_t>(n.len)};
}
std::span<const double> Tape::cval(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {arena_.data() + n.val_off, static_cast<std::size_t>(n.len)};
}

void Tape::check_node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw std::out_of_range("tape node id out of range");
  }
}

std::span<const double> Tape::value(int id) const {
  check_node(id);
  return cval(id);
}

double Tape::scalar(int id) const {
  check_node(id);
  const auto v = cval(id);
  if (v.size() != 1) throw ShapeMismatch("scalar() on non-scalar node");
  return v[0];
}

int Tape::input(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteInput("tape input");
  }
  Node n{};
  n.op = Op::kInput;
  const int id = push(n, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), val(id).begin());
  return id;
}

int Tape::constant(double v) {
  if (!std::isfinite(v)) throw NonFiniteInput("tape constant");
  Node n{};
  n.op = Op::kConst;
  const int id = push(n, 1);
  val(id)[0] = v;
  return id;
}

int Tape::affine(int x, int w_seg, int b_seg) {
  check_node(x);
  if (params_ == nullptr) throw std::logic_error("tape not bound to a ParamSet");
  const SegmentSpec& ws = params_->layout()->seg(w_seg);
  const SegmentSpec& bs = params_->layout()->seg(b_seg);
  const int in_len = nodes_[static_cast<std::size_t>(x)].len;
  if (ws.cols != in_len) throw ShapeMismatch("affine: W cols != input len");
  if (bs.rows != ws.rows || bs.cols != 1) throw ShapeMismatch("affine: bias shape");

  Node n{};
  n.op = Op::kAffine;
  n.a = x;
  n.w_seg = w_seg;
  n.b_seg = b_seg;
  const int id = push(n, ws.rows);
  const auto W = params_->seg(w_seg);
  const auto b = params_->seg(b_seg);
  const auto xin = cval(x);
  auto y = val(id);
  for (int r = 0; r < ws.rows; ++r) {
    double acc = b[static_cast<std::size_t>(r)];
    const double* wrow = W.data() + static_cast<long>(r) * ws.cols;
    for (int c = 0; c < ws.cols; ++c) acc += wrow[c] * xin[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return id;
}

int Tape::relu(int x) {
  check_node(x);
  Node n{};
  n.op = Op::kRelu;
  n.a = x;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = xin[i] > 0.0 ? xin[i] : 0.0;
  return id;
}

int Tape::softmax(int x) {
  check_node(x);
  const auto xin = cval(x);
  for (double v : xin) {
    if (!std::isfinite(v)) throw NonFiniteInput("softmax");
  }
  Node n{};
  n.op = Op::kSoftmax;
  n.a = x;
  const int id = push(n, static_cast<int>(xin.size()));
  const auto xs = cval(x);
  auto y = val(id);
  double m = xs[0];
  for (double v : xs) m = std::max(m, v);
  double z = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    y[i] = std::exp(xs[i] - m);
    z += y[i];
  }
  for (double& v : y) v /= z;
  return id;
}

int Tape::pick(int x, int index) {
  check_node(x);
  if (index < 0 || index >= nodes_[static_cast<std::size_t>(x)].len) {
    throw std::out_of_range("pick index");
  }
  Node n{};
  n.op = Op::kPick;
  n.a = x;
  n.idx = index;
  const int id = push(n, 1);
  val(id)[0] = cval(x)[static_cast<std::size_t>(index)];
  return id;
}

int Tape::log(int x) {
  check_node(x);
  Node n{};
  n.op = Op::kLog;
  n.a = x;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = std::log(xin[i]);
  return id;
}

int Tape::exp(int x) {
  check_node(x);
  Node n{};
  n.op = Op::kExp;
  n.a = x;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = std::exp(xin[i]);
  return id;
}

int Tape::add(int a, int b) {
  check_node(a);
  check_node(b);
  if (nodes_[static_cast<std::size_t>(a)].len != nodes_[static_cast<std::size_t>(b)].len) {
    throw ShapeMismatch("add: length mismatch");
  }
  Node n{};
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  const int id = push(n, nodes_[static_cast<std::size_t>(a)].len);
  const auto va = cval(a);
  const auto vb = cval(b);
  auto y = val(id);
  for (std::size_t i = 0; i < va.size(); ++i) y[i] = va[i] + vb[i];
  return id;
}

int Tape::mul(int a, int b) {
  check_node(a);
  check_node(b);
  if (nodes_[static_cast<std::size_t>(a)].len != nodes_[static_cast<std::size_t>(b)].len) {
    throw ShapeMismatch("mul: length mismatch");
  }
  Node n{};
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  const int id = push(n, nodes_[static_cast<std::size_t>(a)].len);
  const auto va = cval(a);
  const auto vb = cval(b);
  auto y = val(id);
  for (std::size_t i = 0; i < va.size(); ++i) y[i] = va[i] * vb[i];
  return id;
}

int Tape::scale(int x, double c) {
  check_node(x);
  Node n{};
  n.op = Op::kScale;
  n.a = x;
  n.c0 = c;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = c * xin[i];
  return id;
}

int Tape::add_const(int x, double c) {
  check_node(x);
  Node n{};
  n.op = Op::kAddConst;
  n.a = x;
  n.c0 = c;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = xin[i] + c;
  return id;
}

int Tape::scale_by(int x, int scalar_node) {
  check_node(x);
  check_node(scalar_node);
  if (nodes_[static_cast<std::size_t>(scalar_node)].len != 1) {
    throw ShapeMismatch("scale_by: scalar node must have length 1");
  }
  Node n{};
  n.op = Op::kScaleBy;
  n.a = x;
  n.b = scalar_node;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const double s = cval(scalar_node)[0];
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = s * xin[i];
  return id;
}

int Tape::clip(int x, double lo, double hi) {
  check_node(x);
  Node n{};
  n.op = Op::kClip;
  n.a = x;
  n.c0 = lo;
  n.c1 = hi;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = std::min(hi, std::max(lo, xin[i]));
  return id;
}

int Tape::min2(int a, int b) {
  check_node(a);
  check_node(b);
  if (nodes_[static_cast<std::size_t>(a)].len != nodes_[static_cast<std::size_t>(b)].len) {
    throw ShapeMismatch("min2: length mismatch");
  }
  Node n{};
  n.op = Op::kMin2;
  n.a = a;
  n.b = b;
  const int id = push(n, nodes_[static_cast<std::size_t>(a)].len);
  const auto va = cval(a);
  const auto vb = cval(b);
  auto y = val(id);
  for (std::size_t i = 0; i < va.size(); ++i) y[i] = va[i] <= vb[i] ? va[i] : vb[i];
  return id;
}

int Tape::square(int x) {
  check_node(x);
  Node n{};
  n.op = Op::kSquare;
  n.a = x;
  const int id = push(n, nodes_[static_cast<std::size_t>(x)].len);
  const auto xin = cval(x);
  auto y = val(id);
  for (std::size_t i = 0; i < xin.size(); ++i) y[i] = xin[i] * xin[i];
  return id;
}

int Tape::sum_of(std::span<const int> scalar_nodes) {
  for (int id : scalar_nodes) {
    check_node(id);
    if (nodes_[static_cast<std::size_t>(id)].len != 1) {
      throw ShapeMismatch("sum_of: all inputs must have length 1");
    }
  }
  Node n{};
  n.op = Op::kSum;
  n.aux_off = static_cast<int>(aux_.size());
  n.aux_len = static_cast<int>(scalar_nodes.size());
  aux_.insert(aux_.end(), scalar_nodes.begin(), scalar_nodes.end());
  const int id = push(n, 1);
  double acc = 0.0;
  for (int s : scalar_nodes) acc += cval(s)[0];
  val(id)[0] = acc;
  return id;
}

int Tape::sum_elems(int x) {
  check_node(x);
  Node n{};
  n.op = Op::kSumElems;
  n.a = x;
  const int id = push(n, 1);
  double acc = 0.0;
  for (double v : cval(x)) acc += v;
  val(id)[0] = acc;
  return id;
}

int Tape::entropy(int probs) {
  check_node(probs);
  Node n{};
  n.op = Op::kEntropy;
  n.a = probs;
  const int id = push(n, 1);
  const auto p = cval(probs);
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  val(id)[0] = h;
  return id;
}

void Tape::backward(int loss_node, Gradient& out) const {
  if (nodes_.empty()) throw TapeEmpty();
  check_node(loss_node);
  if (nodes_[static_cast<std::size_t>(loss_node)].len != 1) {
    throw ShapeMismatch("backward: loss node must have length 1");
  }
  if (params_ == nullptr || out.layout != params_->layout()) {
    throw ShapeMismatch("backward: gradient layout mismatch");
  }

  grad_arena_.assign(arena_.size(), 0.0);
  auto g = [&](int id) -> double* {
    return grad_arena_.data() + nodes_[static_cast<std::size_t>(id)].val_off;
  };
  g(loss_node)[0] = 1.0;

  for (int id = loss_node; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double* gy = g(id);
    bool any = false;
    for (int i = 0; i < n.len; ++i) {
      if (gy[i] != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    const auto y = cval(id);
    switch (n.op) {
      case Op::kInput:
      case Op::kConst:
        break;
      case Op::kAffine: {
        const SegmentSpec& ws = params_->layout()->seg(n.w_seg);
        const auto W = params_->seg(n.w_seg);
        const auto x = cval(n.a);
        double* gx = g(n.a);
        auto gW = out.seg(n.w_seg);
        auto gb = out.seg(n.b_seg);
        for (int r = 0; r < ws.rows; ++r) {
          const double gr = gy[r];
          if (gr == 0.0) continue;
          gb[static_cast<std::size_t>(r)] += gr;
          const double* wrow = W.data() + static_cast<long>(r) * ws.cols;
          double* gwrow = gW.data() + static_cast<long>(r) * ws.cols;
          for (int c = 0; c < ws.cols; ++c) {
            gwrow[c] += gr * x[static_cast<std::size_t>(c)];
            gx[c] += gr * wrow[c];
          }
        }
        break;
      }
      case Op::kRelu: {
        const auto x = cval(n.a);
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) {
          if (x[static_cast<std::size_t>(i)] > 0.0) gx[i] += gy[i];
        }
        break;
      }
      case Op::kSoftmax: {
        double* gx = g(n.a);
        double dot = 0.0;
        for (int i = 0; i < n.len; ++i) dot += gy[i] * y[static_cast<std::size_t>(i)];
        for (int i = 0; i < n.len; ++i) {
          gx[i] += y[static_cast<std::size_t>(i)] * (gy[i] - dot);
        }
        break;
      }
      case Op::kPick:
        g(n.a)[n.idx] += gy[0];
        break;
      case Op::kLog: {
        const auto x = cval(n.a);
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += gy[i] / x[static_cast<std::size_t>(i)];
        break;
      }
      case Op::kExp: {
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += gy[i] * y[static_cast<std::size_t>(i)];
        break;
      }
      case Op::kAdd: {
        double* ga = g(n.a);
        double* gb = g(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += gy[i];
          gb[i] += gy[i];
        }
        break;
      }
      case Op::kMul: {
        const auto va = cval(n.a);
        const auto vb = cval(n.b);
        double* ga = g(n.a);
        double* gb = g(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += gy[i] * vb[static_cast<std::size_t>(i)];
          gb[i] += gy[i] * va[static_cast<std::size_t>(i)];
        }
        break;
      }
      case Op::kScale: {
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += n.c0 * gy[i];
        break;
      }
      case Op::kAddConst: {
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += gy[i];
        break;
      }
      case Op::kScaleBy: {
        const double s = cval(n.b)[0];
        const auto x = cval(n.a);
        double* gx = g(n.a);
        double* gs = g(n.b);
        for (int i = 0; i < n.len; ++i) {
          gx[i] += s * gy[i];
          gs[0] += gy[i] * x[static_cast<std::size_t>(i)];
        }
        break;
      }
      case Op::kClip: {
        const auto x = cval(n.a);
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) {
          const double v = x[static_cast<std::size_t>(i)];
          if (v > n.c0 && v < n.c1) gx[i] += gy[i];
        }
        break;
      }
      case Op::kMin2: {
        const auto va = cval(n.a);
        const auto vb = cval(n.b);
        double* ga = g(n.a);
        double* gb = g(n.b);
        for (int i = 0; i < n.len; ++i) {
          if (va[static_cast<std::size_t>(i)] <= vb[static_cast<std::size_t>(i)]) {
            ga[i] += gy[i];
          } else {
            gb[i] += gy[i];
          }
        }
        break;
      }
      case Op::kSquare: {
        const auto x = cval(n.a);
        double* gx = g(n.a);
        for (int i = 0; i < n.len; ++i) gx[i] += 2.0 * x[static_cast<std::size_t>(i)] * gy[i];
        break;
      }
      case Op::kSum: {
        for (int k = 0; k < n.aux_len; ++k) {
          g(aux_[static_cast<std::size_t>(n.aux_off + k)])[0] += gy[0];
        }
        break;
      }
      case Op::kSumElems: {
        const auto x = cval(n.a);
        double* gx = g(n.a);
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[0];
        break;
      }
      case Op::kEntropy: {
        const auto p = cval(n.a);
        double* gp = g(n.a);
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (p[i] > 0.0) gp[i] += gy[0] * (-std::log(p[i]) - 1.0);
        }
        break;
      }
    }
  }
}

}  // namespace abrlab
