#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::flexseg {

/// What a 4KB physical frame currently holds.
enum class FrameUse : std::uint8_t { Free, Table, RestSeg, Data };

/// Free-frame pool for everything outside the restricted segments.
///
/// Frames are grouped in 2MB chunks. A 4KB request is served from the lowest
/// partially used chunk, else breaks the lowest whole free chunk; a 2MB
/// request needs a whole free chunk. A chunk whose small frames are all
/// released becomes whole again.
class FrameAllocator {
public:
    /// Frames [0, pool_begin) belong to restricted segments; [pool_begin,
    /// total_frames) form the pool. Counts are in 4KB frames.
    FrameAllocator(std::uint64_t total_frames, std::uint64_t pool_begin);

    std::optional<Pfn> alloc(PageSize size, FrameUse use);
    void release(Pfn pfn, FrameUse use);

    std::uint64_t count(FrameUse use) const { return counts_[static_cast<int>(use)]; }
    std::uint64_t total_frames() const { return total_frames_; }
    std::uint64_t pool_begin() const { return pool_begin_; }
    bool is_free(std::uint64_t frame) const;

private:
    static constexpr unsigned kFramesPerChunk = kLargePageBytes / kSmallPageBytes;

    struct Chunk {
        std::array<std::uint64_t, kFramesPerChunk / 64> used{};
        std::uint16_t free = 0;
        std::uint16_t capacity = 0;  // frames of this chunk inside the pool
        bool large = false;
    };

    Chunk& chunk_of(std::uint64_t frame);
    const Chunk& chunk_of(std::uint64_t frame) const;
    bool whole(const Chunk& c) const { return c.capacity == kFramesPerChunk; }

    std::uint64_t total_frames_;
    std::uint64_t pool_begin_;
    std::uint64_t first_chunk_;
    std::vector<Chunk> chunks_;
    std::set<std::uint64_t> partial_;
    std::set<std::uint64_t> whole_free_;
    std::array<std::uint64_t, 4> counts_{};
};

}  // namespace hvm::flexseg
