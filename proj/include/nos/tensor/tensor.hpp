#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace nos {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// 64-byte aligned storage. Eigen peels unaligned heads off its vectorized
/// loops, so buffer alignment would otherwise change summation order and make
/// results depend on where malloc placed the data.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// `Tensor` is a cheap handle: copies share storage. Use `clone()` for a deep
/// copy. Operations in ops.hpp record themselves on the active `Tape` when any
/// input requires a gradient.
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(impl_); }

    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> data();
    double item() const;
    double operator[](std::size_t i) const { return data()[i]; }

    bool requires_grad() const;
    void set_requires_grad(bool on);

    bool has_grad() const;
    std::span<const double> grad() const;
    /// Handles share storage, so backward closures holding const copies may
    /// still accumulate.
    std::span<double> grad_mut() const;
    void zero_grad();
    void clear_grad();

    /// Deep copy of values; the copy does not require a gradient.
    Tensor clone() const;
    /// Same storage semantics as clone(); reads better at call sites that only
    /// want to cut a value out of the graph.
    Tensor detach() const { return clone(); }

    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        Storage data;
        Storage grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;

    Impl& impl() const;
    static Tensor from_storage(Shape shape, Storage data, bool requires_grad);
};

/// Ordered record of differentiable operations.
///
/// Nodes are appended as operations execute, so inputs always precede the
/// operations that consume them and a reverse sweep is a valid topological
/// order. A tape serves one backward pass; call `clear()` before reuse.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule once,
    /// newest first. `loss` must be a single-element tensor.
    void backward(const Tensor& loss);

    void clear();
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

/// Tape that receives operations on this thread, or nullptr.
Tape* active_tape() noexcept;

/// Installs a tape as the active one for the enclosing scope.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

/// Disables recording for the enclosing scope (inference).
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

private:
    Tape* previous_;
};

namespace detail {

/// True when an op over `inputs` must be recorded on the active tape.
bool should_record(std::initializer_list<const Tensor*> inputs);

}  // namespace detail

}  // namespace nos
