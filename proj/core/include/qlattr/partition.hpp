#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "qlattr/box.hpp"

namespace qlattr {

/// Depth-l binary bisection partition of an initial box Q.
///
/// Every live leaf sits at exactly `depth()` bisections below the root, with
/// the split coordinate cycling 0,1,...,n-1. A leaf is addressed by its
/// bit-path from the root (bit j = level-j choice, 0 = low child). Leaf order
/// is the insertion order: subdividing replaces each leaf by (low, high) in
/// place, pruning keeps relative order, so indices are stable and reproducible.
///
/// Optional excluded boxes U carve out Q \ U: a leaf whose center lies in the
/// open interior of some U-box is flagged; locate() reports "none" inside it
/// and selection never keeps it.
///
/// Concurrency: locate() and all read paths are safe under concurrent readers;
/// subdivide_all() / remove_unmarked() require exclusive access.
class BoxPartition {
public:
    explicit BoxPartition(Box root, std::vector<Box> excluded = {});

    /// Rebuild a partition from explicit leaf paths (e.g. a deserialized
    /// covering). Paths must be distinct and < 2^depth.
    static BoxPartition from_leaves(Box root, int depth, std::vector<std::uint64_t> paths,
                                    std::vector<Box> excluded = {});

    const Box& root() const { return root_; }
    int depth() const { return depth_; }
    std::size_t leaf_count() const { return leaves_.size(); }
    bool empty() const { return leaves_.empty(); }
    const std::vector<Box>& excluded_boxes() const { return excluded_boxes_; }

    Box leaf_box(std::size_t i) const;
    std::uint64_t leaf_path(std::size_t i) const { return leaves_[i].path; }
    bool leaf_excluded(std::size_t i) const { return leaves_[i].excluded; }

    /// Index of the live leaf containing y, by tree descent. Returns nullopt
    /// if y is outside the root, falls into a pruned subtree, or lands in an
    /// excluded leaf. A point exactly on a split plane descends to the high
    /// child (strict-less goes low).
    std::optional<std::size_t> locate(const Vec& y) const;

    /// Replace every live leaf by its two children along axis (depth mod n).
    /// Leaf count doubles; the union of leaves is unchanged.
    void subdivide_all();

    /// Prune leaves with mark == 0; survivors keep their relative order and
    /// are re-indexed contiguously.
    void remove_unmarked(std::span<const std::uint8_t> marks);

    /// Radius vector shared by all leaves at the current depth.
    Vec leaf_radius() const;

private:
    struct Leaf {
        std::uint64_t path;
        bool excluded;
    };

    BoxPartition() = default;
    void rebuild_index();
    bool center_excluded(const Vec& c) const;
    Box box_for_path(std::uint64_t path, int depth) const;

    Box root_;
    int depth_ = 0;
    std::vector<Leaf> leaves_;
    std::vector<Box> excluded_boxes_;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

} // namespace qlattr
