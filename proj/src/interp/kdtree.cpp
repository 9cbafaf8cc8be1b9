#include "nos/interp/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

constexpr std::size_t kLeafSize = 8;

struct Candidate {
    double d2;
    std::size_t index;
    bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

double dist2(const double* p, double x, double y) {
    const double dx = p[0] - x, dy = p[1] - y;
    return dx * dx + dy * dy;
}

std::vector<Neighbor> finish(std::vector<Candidate> c) {
    std::sort(c.begin(), c.end());
    std::vector<Neighbor> out;
    out.reserve(c.size());
    for (const Candidate& k : c) out.push_back({k.index, std::sqrt(k.d2)});
    return out;
}

}  // namespace

KdTree2::KdTree2(std::vector<double> xy) : xy_(std::move(xy)) {
    if (xy_.size() % 2 != 0) throw DimensionError("kd-tree: coordinates must come in (x, y) pairs");
    order_.resize(size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.push_back({});  // id 0 reserved for "no child"
    if (!order_.empty()) build(0, order_.size());
}

std::size_t KdTree2::build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    Node n{begin, end};
    n.lo[0] = n.lo[1] = INFINITY;
    n.hi[0] = n.hi[1] = -INFINITY;
    for (std::size_t i = begin; i < end; ++i) {
        for (int a = 0; a < 2; ++a) {
            n.lo[a] = std::min(n.lo[a], xy_[2 * order_[i] + a]);
            n.hi[a] = std::max(n.hi[a], xy_[2 * order_[i] + a]);
        }
    }
    if (end - begin > kLeafSize) {
        n.axis = (n.hi[0] - n.lo[0]) >= (n.hi[1] - n.lo[1]) ? 0 : 1;
        const std::size_t mid = begin + (end - begin) / 2;
        const int axis = n.axis;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return xy_[2 * a + axis] < xy_[2 * b + axis];
                         });
        n.split = xy_[2 * order_[mid] + axis];
        n.left = build(begin, mid);
        n.right = build(mid, end);
    }
    nodes_[id] = n;
    return id;
}

std::vector<Neighbor> KdTree2::knn(double x, double y, std::size_t k) const {
    if (k == 0 || order_.empty()) return {};
    k = std::min(k, size());
    std::priority_queue<Candidate> heap;  // max-heap: top is the current worst
    auto box_d2 = [&](const Node& n) {
        const double dx = std::max({n.lo[0] - x, 0.0, x - n.hi[0]});
        const double dy = std::max({n.lo[1] - y, 0.0, y - n.hi[1]});
        return dx * dx + dy * dy;
    };
    std::vector<std::size_t> stack{1};
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        // Equal distances must still be explored: they may carry a lower index.
        if (heap.size() == k && box_d2(n) > heap.top().d2) continue;
        if (n.left == 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const Candidate c{dist2(&xy_[2 * order_[i]], x, y), order_[i]};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            continue;
        }
        const double q = n.axis == 0 ? x : y;
        // Push the far child first so the near child is searched first.
        if (q < n.split) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    std::vector<Candidate> c;
    c.reserve(heap.size());
    while (!heap.empty()) {
        c.push_back(heap.top());
        heap.pop();
    }
    return finish(std::move(c));
}

std::vector<Neighbor> brute_force_knn(const std::vector<double>& xy, double x, double y, std::size_t k) {
    std::vector<Candidate> all;
    all.reserve(xy.size() / 2);
    for (std::size_t i = 0; i < xy.size() / 2; ++i) all.push_back({dist2(&xy[2 * i], x, y), i});
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return finish(std::move(all));
}

}  // namespace nos
