#pragma once

// Define-by-run reverse-mode differentiation over small dense tensors.
//
// A Tape installs itself as the thread's active computation record for its
// lifetime. Operations on tensors that require gradients append an entry to
// the active tape; without a tape they only compute values. backward() walks
// the tape in reverse and accumulates into each tensor's grad buffer.
//
// detach() yields a tensor with identical values whose node is flagged as
// detached: nothing upstream of it receives gradient through that path.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace idil::ad {

// Dimension sizes, row-major. Rank 0 is a scalar, rank 1 a row vector.
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);

namespace detail {
struct Node;
}

class Tape;

// Shared handle to a node: copies alias the same values and gradient.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor from_values(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  // Leaf with requires_grad set; what optimizers update.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const noexcept { return static_cast<bool>(node_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // 2-D view: rank 0 is 1x1 and rank 1 is 1xn.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Direct write access for optimizers. Not recorded.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool detached() const;

  bool has_grad() const;
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  // Allocates a zero buffer on first use.
  std::span<double> mutable_grad();
  void zero_grad();

  // Position in the active tape, if this tensor has been recorded there.
  std::optional<std::size_t> node_id() const;

  // Deep copy of values and the requires_grad flag; no gradient, no history.
  Tensor clone() const;

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  friend class Tape;
  friend Tensor detach(const Tensor& x);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

// One computation record. Nested tapes shadow the outer one until destroyed.
class Tape {
 public:
  // Local rule: receives d(root)/d(output) and adds into d(root)/d(input).
  // A null pointer marks an input that does not require gradient.
  using BackwardRule =
      std::function<void(std::span<const double> grad_out, std::span<std::vector<double>*> grad_in)>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current() noexcept;

  void record(std::span<const Tensor> inputs, const Tensor& output, BackwardRule rule);

  // Reverse sweep from a scalar root. Gradients add into existing buffers.
  void backward(const Tensor& root);

  std::optional<std::size_t> id_of(const Tensor& t) const;
  std::size_t num_ops() const noexcept { return entries_.size(); }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  // Every entry's inputs were registered before its output.
  bool is_topologically_ordered() const;

 private:
  struct Entry {
    std::vector<std::size_t> inputs;
    std::size_t output;
    BackwardRule rule;
  };

  std::size_t slot_for(const Tensor& t);

  Tape* previous_;
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  std::unordered_map<const detail::Node*, std::size_t> slots_;
  std::vector<Entry> entries_;
};

// Runs backward on the active tape. Throws if there is none.
void backward(const Tensor& root);

// Elementwise, equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Elementwise sum of equally shaped tensors, accumulated left to right.
Tensor add_n(std::span<const Tensor> terms);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Natural log; every input must be positive.
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
// x * sigmoid(x)
Tensor silu(const Tensor& a);
// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

// x[n x d] * w[d x h] + b[h], bias broadcast over rows. Zero entries of x
// are skipped, so sparse inputs cost O(nnz * h).
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Scalar view of a[row, col]; gradient routes one-hot back into `a`.
Tensor select(const Tensor& a, std::size_t row, std::size_t col);

// Identity on values, zero gradient to everything upstream.
Tensor detach(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

double sigmoid(double x);

}  // namespace idil::ad
