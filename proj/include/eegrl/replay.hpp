#pragma once

#include <cstdint>
#include <vector>

#include "eegrl/preproc.hpp"
#include "eegrl/rng.hpp"

namespace eegrl {

// States are referenced, not copied; the preprocessed sessions own them and
// must outlive the queue.
struct Transition {
    const SegmentState* state = nullptr;
    int action = 0;
    double reward = 0.0;
    bool done = false;
    const SegmentState* next_state = nullptr;  // null for terminal transitions
};

class ReplayQueue;

// Batch of (slot, expected sequence number) references into the queue.
// Entries are resolved lazily; a slot overwritten since sampling is detected
// by its sequence number and re-drawn.
class BatchBuffer {
  public:
    struct EntryRef {
        size_t slot;
        uint64_t expected_seq;
    };

    const std::vector<EntryRef>& entries() const { return entries_; }

    // Pointers alias the queue's storage cells; no payload is copied.
    std::vector<const Transition*> resolve(const ReplayQueue& queue, Rng& rng);

  private:
    friend class ReplayQueue;
    std::vector<EntryRef> entries_;
};

// Bounded FIFO ring of transitions. Sequence numbers count pushes from 1 and
// wrap at `modulus`.
class ReplayQueue {
  public:
    explicit ReplayQueue(size_t capacity, uint64_t modulus = uint64_t{1} << 32);

    uint64_t push(Transition t);

    size_t size() const { return std::min<uint64_t>(pushes_, capacity_); }
    size_t capacity() const { return capacity_; }
    uint64_t modulus() const { return modulus_; }

    const Transition& slot(size_t i) const { return slots_[i].payload; }
    uint64_t slot_seq(size_t i) const { return slots_[i].seq; }

    // batch_size distinct slots drawn uniformly without replacement
    BatchBuffer sample(size_t batch_size, Rng& rng) const;

  private:
    struct Slot {
        Transition payload;
        uint64_t seq = 0;
    };
    std::vector<Slot> slots_;
    size_t capacity_;
    uint64_t modulus_;
    uint64_t pushes_ = 0;
};

}  // namespace eegrl
