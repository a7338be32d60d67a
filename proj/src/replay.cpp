#include "eegrl/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace eegrl {

ReplayQueue::ReplayQueue(size_t capacity, uint64_t modulus)
    : capacity_(capacity), modulus_(modulus) {
    if (capacity == 0) throw std::invalid_argument("ReplayQueue: capacity must be positive");
    if (modulus < 2) throw std::invalid_argument("ReplayQueue: modulus must be at least 2");
    slots_.resize(capacity);
}

uint64_t ReplayQueue::push(Transition t) {
    ++pushes_;
    const uint64_t seq = pushes_ % modulus_;
    Slot& s = slots_[static_cast<size_t>((pushes_ - 1) % capacity_)];
    s.payload = t;
    s.seq = seq;
    return seq;
}

BatchBuffer ReplayQueue::sample(size_t batch_size, Rng& rng) const {
    const size_t n = size();
    if (batch_size > n)
        throw std::invalid_argument("ReplayQueue: batch of " + std::to_string(batch_size) +
                                    " exceeds stored " + std::to_string(n) + " transitions");
    // partial Fisher-Yates over slot indices
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    BatchBuffer buf;
    buf.entries_.reserve(batch_size);
    for (size_t i = 0; i < batch_size; ++i) {
        const size_t j = i + static_cast<size_t>(rng.uniform_int(static_cast<int>(n - i)));
        std::swap(idx[i], idx[j]);
        buf.entries_.push_back({idx[i], slots_[idx[i]].seq});
    }
    return buf;
}

std::vector<const Transition*> BatchBuffer::resolve(const ReplayQueue& queue, Rng& rng) {
    const size_t n = queue.size();
    if (entries_.size() > n)
        throw std::logic_error("BatchBuffer: queue shrank below batch size");

    std::vector<char> taken(n, 0);
    for (const EntryRef& e : entries_)
        if (e.slot < n && queue.slot_seq(e.slot) == e.expected_seq) taken[e.slot] = 1;

    std::vector<const Transition*> out;
    out.reserve(entries_.size());
    for (EntryRef& e : entries_) {
        if (e.slot >= n || queue.slot_seq(e.slot) != e.expected_seq) {
            // stale: overwritten since sampling; re-draw an unused slot
            size_t replacement;
            do {
                replacement = static_cast<size_t>(rng.uniform_int(static_cast<int>(n)));
            } while (taken[replacement]);
            taken[replacement] = 1;
            e.slot = replacement;
            e.expected_seq = queue.slot_seq(replacement);
        }
        out.push_back(&queue.slot(e.slot));
    }
    return out;
}

}  // namespace eegrl
