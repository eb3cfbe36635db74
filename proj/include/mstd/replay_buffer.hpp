#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "mstd/mdp.hpp"

namespace mstd {

/// Fixed-length training sample (S_0, A_0, R_1, S_1, ..., S_L).
/// Triplet i holds (states[i], actions[i], rewards[i]) = (S_i, A_i, R_{i+1});
/// states has the extra trailing S_L. pad_flags[i] marks triplet i as a
/// replicated termination tuple; terminal_flag says S_L is terminal.
struct MultiStateSample {
  std::vector<StateVec> states;        // L+1
  std::vector<ActionVec> actions;      // L
  std::vector<double> rewards;         // L
  std::vector<std::uint8_t> pad_flags; // L
  bool terminal_flag = false;
};

/// Structural checks for a sample against window length L. Empty result
/// means valid: exact field lengths, monotone pad flags (once padded, padded
/// until the end), and a real first triplet.
std::vector<std::string> validate_sample(const MultiStateSample& s, int window);

/// Sliding window that turns a stream of one-step transitions into
/// MultiStateSamples. Keeps at most L pending triplets; emits a sample
/// whenever the window is full, then drops the oldest triplet. On episode
/// termination, finalize_episode replays the termination tuple to flush
/// partially filled windows with pad flags set.
class WindowBuilder {
 public:
  explicit WindowBuilder(int window);

  int window() const { return window_; }
  std::size_t pending() const { return pending_.size(); }

  /// Discards the in-progress window and arms the builder for a new
  /// episode. Also the only way to continue after finalize_episode.
  void reset();

  struct Triplet {
    StateVec state;
    ActionVec action;
    double reward = 0.0;
    bool padded = false;
  };

 private:
  friend std::size_t push_transition(WindowBuilder&, class RingBuffer&,
                                     const Transition&);
  friend std::size_t finalize_episode(WindowBuilder&, class RingBuffer&);

  MultiStateSample assemble() const;

  int window_;
  std::deque<Triplet> pending_;
  StateVec next_state_;
  Triplet last_triplet_;
  std::size_t seen_ = 0;       // transitions since reset
  bool last_terminal_ = false;
  bool finalized_ = false;
};

/// FIFO sample store with bounded capacity.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 100000);

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i = 0 is the oldest sample currently held.
  const MultiStateSample& at(std::size_t i) const;

  void push(MultiStateSample sample);

 private:
  std::size_t capacity_;
  std::vector<MultiStateSample> storage_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
};

/// Feeds one transition into the window. Returns how many samples were
/// emitted into the buffer (0 or 1). Throws ContractError if the builder was
/// finalized without reset or the previous transition already terminated.
std::size_t push_transition(WindowBuilder& builder, RingBuffer& buffer,
                            const Transition& t);

/// Flushes the window after a terminal transition by replicating the
/// termination tuple. Returns the number of padded samples emitted. Windows
/// that would start with a padded triplet are dropped. Throws ContractError
/// if the last pushed transition was not terminal; an empty episode is a
/// no-op. The builder must be reset before the next push.
std::size_t finalize_episode(WindowBuilder& builder, RingBuffer& buffer);

/// Uniform draw of n distinct samples. Throws ContractError when n exceeds
/// the buffer size.
std::vector<MultiStateSample> sample_minibatch(const RingBuffer& buffer,
                                               std::size_t n,
                                               std::mt19937_64& gen);

/// Flat little-endian binary dump: header (window L, obs dim, action dim,
/// count), then per sample the states, actions, rewards and flags (L pad
/// flags then the terminal flag, one byte each).
void dump_buffer(const RingBuffer& buffer, const std::string& path);

/// Inverse of dump_buffer. capacity = 0 keeps the default (or the stored
/// count if larger). Throws ConfigError on malformed files.
RingBuffer restore_buffer(const std::string& path, std::size_t capacity = 0);

}  // namespace mstd
