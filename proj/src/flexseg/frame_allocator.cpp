#include "hvm/flexseg/frame_allocator.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "hvm/core/error.hpp"

namespace hvm::flexseg {

FrameAllocator::FrameAllocator(std::uint64_t total_frames, std::uint64_t pool_begin)
    : total_frames_(total_frames), pool_begin_(pool_begin), first_chunk_(pool_begin / kFramesPerChunk) {
    if (pool_begin > total_frames) throw ConfigError("frame pool starts beyond physical memory");
    counts_[static_cast<int>(FrameUse::RestSeg)] = pool_begin;
    counts_[static_cast<int>(FrameUse::Free)] = total_frames - pool_begin;
    if (pool_begin == total_frames) return;
    const std::uint64_t last_chunk = (total_frames - 1) / kFramesPerChunk;
    chunks_.resize(last_chunk - first_chunk_ + 1);
    for (std::uint64_t c = first_chunk_; c <= last_chunk; ++c) {
        Chunk& ch = chunks_[c - first_chunk_];
        const std::uint64_t lo = c * kFramesPerChunk;
        for (unsigned i = 0; i < kFramesPerChunk; ++i) {
            const std::uint64_t f = lo + i;
            if (f < pool_begin || f >= total_frames) {
                ch.used[i / 64] |= std::uint64_t{1} << (i % 64);
            } else {
                ++ch.capacity;
            }
        }
        ch.free = ch.capacity;
        if (whole(ch)) {
            whole_free_.insert(c);
        } else {
            partial_.insert(c);
        }
    }
}

FrameAllocator::Chunk& FrameAllocator::chunk_of(std::uint64_t frame) {
    return chunks_[frame / kFramesPerChunk - first_chunk_];
}

const FrameAllocator::Chunk& FrameAllocator::chunk_of(std::uint64_t frame) const {
    return chunks_[frame / kFramesPerChunk - first_chunk_];
}

bool FrameAllocator::is_free(std::uint64_t frame) const {
    if (frame < pool_begin_ || frame >= total_frames_) return false;
    const Chunk& ch = chunk_of(frame);
    const unsigned i = frame % kFramesPerChunk;
    return !ch.large && ((ch.used[i / 64] >> (i % 64)) & 1) == 0;
}

std::optional<Pfn> FrameAllocator::alloc(PageSize size, FrameUse use) {
    if (use == FrameUse::Free || use == FrameUse::RestSeg) {
        throw StateError("frames can only be allocated for tables or data");
    }
    if (size == PageSize::Large) {
        if (whole_free_.empty()) return std::nullopt;
        const std::uint64_t c = *whole_free_.begin();
        whole_free_.erase(whole_free_.begin());
        Chunk& ch = chunks_[c - first_chunk_];
        ch.large = true;
        ch.free = 0;
        counts_[static_cast<int>(FrameUse::Free)] -= kFramesPerChunk;
        counts_[static_cast<int>(use)] += kFramesPerChunk;
        return Pfn{c, PageSize::Large};
    }
    std::uint64_t c = 0;
    if (!partial_.empty()) {
        c = *partial_.begin();
    } else if (!whole_free_.empty()) {
        c = *whole_free_.begin();
        whole_free_.erase(whole_free_.begin());
        partial_.insert(c);
    } else {
        return std::nullopt;
    }
    Chunk& ch = chunks_[c - first_chunk_];
    unsigned bit = 0;
    for (unsigned w = 0; w < ch.used.size(); ++w) {
        if (~ch.used[w] != 0) {
            bit = w * 64 + static_cast<unsigned>(std::countr_zero(~ch.used[w]));
            break;
        }
    }
    ch.used[bit / 64] |= std::uint64_t{1} << (bit % 64);
    if (--ch.free == 0) partial_.erase(c);
    counts_[static_cast<int>(FrameUse::Free)] -= 1;
    counts_[static_cast<int>(use)] += 1;
    return Pfn{c * kFramesPerChunk + bit, PageSize::Small};
}

void FrameAllocator::release(Pfn pfn, FrameUse use) {
    if (pfn.size == PageSize::Large) {
        const std::uint64_t c = pfn.number;
        if (c < first_chunk_ || c - first_chunk_ >= chunks_.size() || !chunks_[c - first_chunk_].large) {
            throw StateError("released 2MB frame " + std::to_string(c) + " is not allocated");
        }
        Chunk& ch = chunks_[c - first_chunk_];
        ch.large = false;
        ch.free = ch.capacity;
        whole_free_.insert(c);
        counts_[static_cast<int>(FrameUse::Free)] += kFramesPerChunk;
        counts_[static_cast<int>(use)] -= kFramesPerChunk;
        return;
    }
    const std::uint64_t f = pfn.number;
    if (f < pool_begin_ || f >= total_frames_) throw StateError("released frame outside the pool");
    Chunk& ch = chunk_of(f);
    const unsigned i = f % kFramesPerChunk;
    if (ch.large || ((ch.used[i / 64] >> (i % 64)) & 1) == 0) {
        throw StateError("released frame " + std::to_string(f) + " is not allocated");
    }
    ch.used[i / 64] &= ~(std::uint64_t{1} << (i % 64));
    ++ch.free;
    const std::uint64_t c = f / kFramesPerChunk;
    if (ch.free == ch.capacity && whole(ch)) {
        partial_.erase(c);
        whole_free_.insert(c);
    } else {
        partial_.insert(c);
    }
    counts_[static_cast<int>(FrameUse::Free)] += 1;
    counts_[static_cast<int>(use)] -= 1;
}

}  // namespace hvm::flexseg
