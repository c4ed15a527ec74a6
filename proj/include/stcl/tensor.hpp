#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stcl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor with an optional gradient slot and the provenance
/// needed for reverse-mode differentiation.
///
/// A tensor is a shared handle: copies alias the same storage. Operations
/// build a fresh graph on every forward pass; a graph is owned by whichever
/// tensors still reference its outputs and must stay on one thread.
template <typename T>
class BasicTensor {
 public:
  struct Impl;
  using BackwardFn = std::function<void(Impl& self)>;

  struct Node {
    std::string_view op;
    std::vector<std::shared_ptr<Impl>> parents;
    BackwardFn backward;
  };

  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    std::unique_ptr<Node> node;

    void ensure_grad() {
      if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
  };

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  T item() const;

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<T> grad() { return impl_->grad; }
  std::span<const T> grad() const { return impl_->grad; }
  void zero_grad();

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool is_leaf() const { return impl_->node == nullptr; }
  std::string_view op() const { return impl_->node ? impl_->node->op : std::string_view("leaf"); }

  /// Same values in new storage, cut from any graph.
  BasicTensor detach() const;

  /// Accumulates d(this)/d(t) into every reachable tensor t with
  /// requires_grad set. Only scalar tensors may call this. Gradients of leaf
  /// tensors accumulate across calls; interior gradients are recomputed.
  void backward() const;

  Impl& impl() { return *impl_; }
  const std::shared_ptr<Impl>& impl_ptr() const { return impl_; }

 private:
  explicit BasicTensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;

  template <typename U>
  friend BasicTensor<U> make_result(Shape, std::vector<U>, std::string_view,
                                    std::vector<BasicTensor<U>>,
                                    typename BasicTensor<U>::BackwardFn);
};

/// Creates the output of an operation. The node (and backward closure) is
/// only attached when at least one parent requires a gradient.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> values, std::string_view op,
                           std::vector<BasicTensor<T>> parents,
                           typename BasicTensor<T>::BackwardFn backward);

/// While alive, operations on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace stcl
