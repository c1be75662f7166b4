// Minimal reverse-mode differentiation for small dense networks, float64.
//
// Parameters live in a ParamSet: named segments (matrix or vector) packed
// into one flat array with a stable offset table, so flatten/unflatten is the
// identity and checkpoints are trivial. A Tape records vector-valued
// primitive ops during one forward pass; backward() replays them in reverse
// and accumulates exact gradients of a scalar loss into a Gradient with the
// same layout.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/rng.hpp"

namespace abrlab {

enum class Net { none, actor, critic };

struct SegmentSpec {
  std::string name;
  int rows = 0;
  int cols = 1;  // 1 for vectors; matrices are row-major rows x cols
  Net net = Net::none;
  int expert = -1;  // -1: shared (router, heads)
  long offset = 0;
  long size() const { return static_cast<long>(rows) * cols; }
};

class ParamLayout {
 public:
  int add(std::string name, int rows, int cols, Net net = Net::none, int expert = -1);
  int index_of(const std::string& name) const;  // -1 if absent
  const SegmentSpec& seg(int id) const { return segs_.at(static_cast<std::size_t>(id)); }
  int count() const { return static_cast<int>(segs_.size()); }
  long flat_len() const { return total_; }

 private:
  std::vector<SegmentSpec> segs_;
  long total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(LayoutPtr layout)
      : layout_(std::move(layout)),
        flat_(layout_ ? static_cast<std::size_t>(layout_->flat_len()) : 0, 0.0) {}

  const LayoutPtr& layout() const { return layout_; }
  long flat_len() const { return static_cast<long>(flat_.size()); }
  std::span<double> flat() { return flat_; }
  std::span<const double> flat() const { return flat_; }
  std::span<double> seg(int id);
  std::span<const double> seg(int id) const;

 private:
  LayoutPtr layout_;
  std::vector<double> flat_;
};

struct Gradient {
  LayoutPtr layout;
  std::vector<double> flat;

  explicit Gradient(LayoutPtr l = nullptr)
      : layout(std::move(l)),
        flat(layout ? static_cast<std::size_t>(layout->flat_len()) : 0, 0.0) {}
  std::span<double> seg(int id);
  std::span<const double> seg(int id) const;
  void zero() { std::fill(flat.begin(), flat.end(), 0.0); }
};

class ShapeMismatch : public std::invalid_argument {
 public:
  explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};
class NonFiniteInput : public std::invalid_argument {
 public:
  explicit NonFiniteInput(const std::string& what) : std::invalid_argument(what) {}
};
class TapeEmpty : public std::logic_error {
 public:
  TapeEmpty() : std::logic_error("backward() on an empty tape") {}
};

// i.i.d. standard normal entries; deterministic per (stream key, counter).
std::vector<double> gaussian_vector(RngStream& rng, long len);

class Tape {
 public:
  Tape() = default;

  // Binds the tape to the parameters read by affine(); clears recorded ops.
  void reset(const ParamSet& params);
  void clear();
  bool empty() const { return nodes_.empty(); }

  int input(std::span<const double> v);
  int constant(double v);

  // y = W x + b with W = seg(w_seg) [rows x cols], b = seg(b_seg) [rows].
  int affine(int x, int w_seg, int b_seg);
  int relu(int x);
  int softmax(int x);  // max-subtracted, stable
  int pick(int x, int index);
  int log(int x);
  int exp(int x);
  int add(int a, int b);
  int mul(int a, int b);  // elementwise
  int scale(int x, double c);
  int add_const(int x, double c);
  int scale_by(int x, int scalar_node);  // y = s * x, s a length-1 node
  int clip(int x, double lo, double hi);
  int min2(int a, int b);  // elementwise; ties take a
  int square(int x);
  int sum_of(std::span<const int> scalar_nodes);  // sum of length-1 nodes
  int sum_elems(int x);                           // sum of one node's entries
  int entropy(int probs);  // -sum p ln p with 0 ln 0 = 0

  std::span<const double> value(int id) const;
  double scalar(int id) const;

  // Reverse pass from a length-1 loss node; accumulates parameter gradients.
  void backward(int loss_node, Gradient& out) const;

 private:
  enum class Op : std::uint8_t {
    kInput, kConst, kAffine, kRelu, kSoftmax, kPick, kLog, kExp, kAdd, kMul,
    kScale, kAddConst, kScaleBy, kClip, kMin2, kSquare, kSum, kSumElems, kEntropy,
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    int w_seg = -1, b_seg = -1;
    long val_off = 0;
    int len = 0;
    double c0 = 0.0, c1 = 0.0;
    int aux_off = 0, aux_len = 0;  // into aux_ (sum_of inputs)
    int idx = 0;                   // pick index
  };

  int push(Node n, int len);
  std::span<double> val(int id);
  std::span<const double> cval(int id) const;
  void check_node(int id) const;

  const ParamSet* params_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<double> arena_;
  std::vector<int> aux_;
  mutable std::vector<double> grad_arena_;
};

}  // namespace abrlab
