#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>

#include "s2sim/error.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

using SessionId = std::string;
using EventId = std::uint64_t;

/// Deterministic discrete-event scheduler with a virtual millisecond clock.
///
/// Delivery is totally ordered by (fire_at, insertion sequence): two events
/// scheduled for the same instant fire in the order they were scheduled.
/// Cancelled events never fire. One loop per run; callers that want parallel
/// simulations run independent loops.
class EventLoop {
public:
    EventId schedule(Duration delay, SessionId session, std::function<void()> fn) {
        if (delay.tenths < 0) throw ValidationError("schedule: negative delay");
        EventId id = next_id_++;
        Key key{(now_ + delay).tenths, next_seq_++};
        queue_.emplace(key, Entry{id, std::move(session), std::move(fn)});
        index_.emplace(id, key);
        return id;
    }

    // True iff the event existed and had not fired; cancelled events never deliver.
    bool cancel(EventId id) {
        auto it = index_.find(id);
        if (it == index_.end()) return false;
        queue_.erase(it->second);
        index_.erase(it);
        return true;
    }

    VirtualTime now() const { return now_; }

    // Drains the queue in (fire_at, seq) order; returns the final clock value.
    VirtualTime run_until_idle() {
        while (!queue_.empty()) {
            auto it = queue_.begin();
            if (++processed_ > event_cap_)
                throw LivelockError("event cap of " + std::to_string(event_cap_) +
                                    " exceeded; schedule loop suspected");
            now_ = VirtualTime{it->first.first};
            Entry entry = std::move(it->second);
            index_.erase(entry.id);
            queue_.erase(it);
            entry.fn();
        }
        return now_;
    }

    void set_event_cap(std::uint64_t cap) { event_cap_ = cap; }
    std::uint64_t processed_count() const { return processed_; }
    bool idle() const { return queue_.empty(); }

private:
    using Key = std::pair<std::int64_t, std::uint64_t>;  // (fire_at tenths, seq)
    struct Entry {
        EventId id;
        SessionId session;
        std::function<void()> fn;
    };

    std::map<Key, Entry> queue_;
    std::unordered_map<EventId, Key> index_;
    VirtualTime now_{0};
    std::uint64_t next_seq_ = 0;
    EventId next_id_ = 1;
    std::uint64_t event_cap_ = 1'000'000;
    std::uint64_t processed_ = 0;
};

}  // namespace s2sim
