#include "nos/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "nos/core/errors.hpp"

namespace nos {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : Tensor(from_storage(std::move(shape), Storage(data.begin(), data.end()), requires_grad)) {}

Tensor Tensor::from_storage(Shape shape, Storage data, bool requires_grad) {
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("shape " + shape_str(shape) + " does not match " +
                             std::to_string(data.size()) + " values");
    }
    Tensor t;
    t.impl_ = std::make_shared<Impl>(Impl{std::move(shape), std::move(data), {}, requires_grad});
    return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from_storage(std::move(shape), Storage(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from_storage(std::move(shape), Storage(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_storage({1}, Storage{value}, requires_grad);
}

Tensor::Impl& Tensor::impl() const {
    if (!impl_) throw StateError("use of an undefined tensor");
    return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const double> Tensor::data() const { return impl().data; }

std::span<double> Tensor::data() { return impl().data; }

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

void Tensor::set_requires_grad(bool on) { impl().requires_grad = on; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw StateError("tensor of shape " + shape_str(shape()) + " has no gradient");
    return impl().grad;
}

std::span<double> Tensor::grad_mut() const {
    Impl& i = impl();
    if (i.grad.empty()) i.grad.assign(i.data.size(), 0.0);
    return i.grad;
}

void Tensor::zero_grad() {
    Impl& i = impl();
    if (!i.grad.empty()) std::fill(i.grad.begin(), i.grad.end(), 0.0);
}

void Tensor::clear_grad() { impl().grad.clear(); }

Tensor Tensor::clone() const {
    const Impl& i = impl();
    return from_storage(i.shape, i.data, false);
}

// ---------------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() noexcept { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
    if (consumed_) throw StateError("recording onto a tape that already ran backward; clear() it first");
    output.set_requires_grad(true);
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw StateError("tape backward already ran");
    if (loss.numel() != 1) throw DimensionError("backward requires a scalar loss, got " + shape_str(loss.shape()));
    consumed_ = true;
    Tensor seed = loss;
    seed.grad_mut()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output.has_grad()) continue;  // not on any path to the loss
        it->backward();
    }
}

void Tape::clear() {
    nodes_.clear();
    consumed_ = false;
}

namespace detail {

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (g_active_tape == nullptr) return false;
    return std::any_of(inputs.begin(), inputs.end(),
                       [](const Tensor* t) { return t->defined() && t->requires_grad(); });
}

}  // namespace detail

}  // namespace nos
