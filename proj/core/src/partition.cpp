#include "qlattr/partition.hpp"

#include <stdexcept>

namespace qlattr {

namespace {
constexpr int kMaxDepth = 63; // path bits live in a uint64_t
}

BoxPartition::BoxPartition(Box root, std::vector<Box> excluded)
    : root_(root), excluded_boxes_(std::move(excluded)) {
    for (const Box& u : excluded_boxes_) {
        if (u.dim() != root_.dim())
            throw std::invalid_argument("BoxPartition: excluded box dimension mismatch");
    }
    leaves_.push_back({0, center_excluded(root_.center)});
    rebuild_index();
}

BoxPartition BoxPartition::from_leaves(Box root, int depth, std::vector<std::uint64_t> paths,
                                       std::vector<Box> excluded) {
    if (depth < 0 || depth > kMaxDepth) throw std::invalid_argument("from_leaves: bad depth");
    BoxPartition p;
    p.root_ = root;
    p.depth_ = depth;
    p.excluded_boxes_ = std::move(excluded);
    const std::uint64_t limit = depth == kMaxDepth ? ~0ULL : (1ULL << depth);
    p.leaves_.reserve(paths.size());
    for (std::uint64_t path : paths) {
        if (depth < kMaxDepth && path >= limit)
            throw std::invalid_argument("from_leaves: path exceeds depth");
        p.leaves_.push_back({path, false});
    }
    p.rebuild_index();
    if (p.index_.size() != p.leaves_.size())
        throw std::invalid_argument("from_leaves: duplicate leaf path");
    for (Leaf& leaf : p.leaves_)
        leaf.excluded = p.center_excluded(p.box_for_path(leaf.path, depth).center);
    return p;
}

bool BoxPartition::center_excluded(const Vec& c) const {
    for (const Box& u : excluded_boxes_)
        if (u.contains_interior(c)) return true;
    return false;
}

Box BoxPartition::box_for_path(std::uint64_t path, int depth) const {
    Vec c = root_.center;
    Vec r = root_.radius;
    const int n = root_.dim();
    for (int level = 0; level < depth; ++level) {
        const int s = level % n;
        r[s] *= 0.5;
        if ((path >> level) & 1ULL)
            c[s] += r[s];
        else
            c[s] -= r[s];
    }
    return Box(c, r);
}

Box BoxPartition::leaf_box(std::size_t i) const { return box_for_path(leaves_[i].path, depth_); }

Vec BoxPartition::leaf_radius() const {
    Vec r = root_.radius;
    const int n = root_.dim();
    for (int level = 0; level < depth_; ++level) r[level % n] *= 0.5;
    return r;
}

std::optional<std::size_t> BoxPartition::locate(const Vec& y) const {
    if (!root_.contains(y)) return std::nullopt;
    Vec c = root_.center;
    Vec r = root_.radius;
    const int n = root_.dim();
    std::uint64_t path = 0;
    for (int level = 0; level < depth_; ++level) {
        const int s = level % n;
        const double split = c[s];
        r[s] *= 0.5;
        if (y[s] < split) {
            c[s] -= r[s];
        } else {
            c[s] += r[s];
            path |= 1ULL << level;
        }
    }
    auto it = index_.find(path);
    if (it == index_.end()) return std::nullopt;
    if (leaves_[it->second].excluded) return std::nullopt;
    return it->second;
}

void BoxPartition::subdivide_all() {
    if (leaves_.empty()) throw std::invalid_argument("subdivide_all: partition has no live leaves");
    if (depth_ >= kMaxDepth) throw std::invalid_argument("subdivide_all: maximum depth reached");

    const int level = depth_;
    std::vector<Leaf> next;
    next.reserve(leaves_.size() * 2);
    const bool check_excluded = !excluded_boxes_.empty();
    for (const Leaf& leaf : leaves_) {
        const std::uint64_t low = leaf.path;
        const std::uint64_t high = leaf.path | (1ULL << level);
        if (check_excluded) {
            const Box parent = box_for_path(leaf.path, depth_);
            auto [bl, bh] = bisect(parent, level % root_.dim());
            next.push_back({low, center_excluded(bl.center)});
            next.push_back({high, center_excluded(bh.center)});
        } else {
            next.push_back({low, false});
            next.push_back({high, false});
        }
    }
    leaves_ = std::move(next);
    ++depth_;
    rebuild_index();
}

void BoxPartition::remove_unmarked(std::span<const std::uint8_t> marks) {
    if (marks.size() != leaves_.size())
        throw std::invalid_argument("remove_unmarked: one mark per live leaf required");
    std::vector<Leaf> kept;
    kept.reserve(leaves_.size());
    for (std::size_t i = 0; i < leaves_.size(); ++i)
        if (marks[i]) kept.push_back(leaves_[i]);
    leaves_ = std::move(kept);
    rebuild_index();
}

void BoxPartition::rebuild_index() {
    index_.clear();
    index_.reserve(leaves_.size() * 2);
    for (std::size_t i = 0; i < leaves_.size(); ++i)
        index_.emplace(leaves_[i].path, static_cast<std::uint32_t>(i));
}

} // namespace qlattr
