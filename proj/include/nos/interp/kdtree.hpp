#pragma once

#include <cstddef>
#include <vector>

namespace nos {

struct Neighbor {
    std::size_t index;
    double distance;
};

/// Static 2-D k-d tree over a point set (x0, y0, x1, y1, ...).
///
/// knn returns min(k, N) points ordered by ascending distance, ties broken
/// by lower point index, so results equal a brute-force scan exactly.
class KdTree2 {
public:
    explicit KdTree2(std::vector<double> xy);

    std::size_t size() const noexcept { return xy_.size() / 2; }
    std::vector<Neighbor> knn(double x, double y, std::size_t k) const;

private:
    struct Node {
        std::size_t begin, end;  ///< range in order_
        std::size_t left = 0, right = 0;  ///< child node ids, 0 = leaf
        int axis = 0;
        double split = 0.0;
        double lo[2], hi[2];  ///< bounding box
    };

    std::size_t build(std::size_t begin, std::size_t end);

    std::vector<double> xy_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Reference O(N) scan with the same ordering rule as KdTree2::knn.
std::vector<Neighbor> brute_force_knn(const std::vector<double>& xy, double x, double y, std::size_t k);

}  // namespace nos
