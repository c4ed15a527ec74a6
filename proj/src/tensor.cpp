#include "stcl/tensor.hpp"

#include <unordered_set>

#include "stcl/error.hpp"

namespace stcl {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto impl = std::make_shared<Impl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ValidationError("tensor shape " + shape_str(shape) + " needs " +
                          std::to_string(shape_numel(shape)) + " values, got " +
                          std::to_string(values.size()));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{}, value, requires_grad);
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw ValidationError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from(impl_->shape, impl_->data, false);
}

template <typename T>
void BasicTensor<T>::backward() const {
  if (numel() != 1) {
    throw ValidationError("backward() needs a scalar loss, got shape " + shape_str(shape()));
  }
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Impl*> order;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, std::size_t>> stack{{impl_.get(), 0}};
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->node && next < node->node->parents.size()) {
      Impl* parent = node->node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (Impl* t : order) {
    if (t->node) t->grad.assign(t->data.size(), T(0));
  }
  impl_->ensure_grad();
  impl_->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* t = *it;
    if (t->node && t->node->backward) t->node->backward(*t);
  }
}

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> values, std::string_view op,
                           std::vector<BasicTensor<T>> parents,
                           typename BasicTensor<T>::BackwardFn backward) {
  auto impl = std::make_shared<typename BasicTensor<T>::Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  bool needs_grad = false;
  if (!g_grad_enabled) parents.clear();
  for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  if (needs_grad) {
    impl->requires_grad = true;
    auto node = std::make_unique<typename BasicTensor<T>::Node>();
    node->op = op;
    for (auto& p : parents) node->parents.push_back(p.impl_ptr());
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return BasicTensor<T>(std::move(impl));
}

template class BasicTensor<float>;
template class BasicTensor<double>;

template BasicTensor<float> make_result(Shape, std::vector<float>, std::string_view,
                                        std::vector<BasicTensor<float>>,
                                        BasicTensor<float>::BackwardFn);
template BasicTensor<double> make_result(Shape, std::vector<double>, std::string_view,
                                         std::vector<BasicTensor<double>>,
                                         BasicTensor<double>::BackwardFn);

}  // namespace stcl
