#include "mstd/replay_buffer.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"
#include "mstd/rng.hpp"

namespace mstd {

using detail::get_f64;
using detail::get_u32;
using detail::get_u64;
using detail::put_f64;
using detail::put_u32;
using detail::put_u64;

std::vector<std::string> validate_sample(const MultiStateSample& s, int window) {
  std::vector<std::string> out;
  std::size_t L = static_cast<std::size_t>(window);
  if (s.states.size() != L + 1) out.push_back("states must have L+1 entries");
  if (s.actions.size() != L) out.push_back("actions must have L entries");
  if (s.rewards.size() != L) out.push_back("rewards must have L entries");
  if (s.pad_flags.size() != L) out.push_back("pad_flags must have L entries");
  if (!s.pad_flags.empty() && s.pad_flags.front())
    out.push_back("first triplet must be real");
  for (std::size_t i = 1; i < s.pad_flags.size(); ++i)
    if (s.pad_flags[i - 1] && !s.pad_flags[i]) {
      out.push_back("pad_flags must be monotone");
      break;
    }
  return out;
}

WindowBuilder::WindowBuilder(int window) : window_(window) {
  if (window < 1) throw ContractError("WindowBuilder: window must be at least 1");
}

void WindowBuilder::reset() {
  pending_.clear();
  next_state_.clear();
  seen_ = 0;
  last_terminal_ = false;
  finalized_ = false;
}

MultiStateSample WindowBuilder::assemble() const {
  MultiStateSample s;
  s.states.reserve(pending_.size() + 1);
  s.actions.reserve(pending_.size());
  s.rewards.reserve(pending_.size());
  s.pad_flags.reserve(pending_.size());
  for (const Triplet& t : pending_) {
    s.states.push_back(t.state);
    s.actions.push_back(t.action);
    s.rewards.push_back(t.reward);
    s.pad_flags.push_back(t.padded ? 1 : 0);
  }
  s.states.push_back(next_state_);
  s.terminal_flag = last_terminal_;
  return s;
}

std::size_t push_transition(WindowBuilder& builder, RingBuffer& buffer,
                            const Transition& t) {
  if (builder.finalized_)
    throw ContractError("push_transition after finalize_episode without reset");
  if (builder.seen_ > 0 && builder.last_terminal_)
    throw ContractError(
        "push_transition after a terminal transition; finalize and reset first");

  builder.last_triplet_ = {t.state, t.action, t.reward, false};
  builder.pending_.push_back(builder.last_triplet_);
  builder.next_state_ = t.next_state;
  builder.last_terminal_ = t.terminated;
  ++builder.seen_;

  if (builder.pending_.size() < static_cast<std::size_t>(builder.window_))
    return 0;
  buffer.push(builder.assemble());
  builder.pending_.pop_front();
  return 1;
}

std::size_t finalize_episode(WindowBuilder& builder, RingBuffer& buffer) {
  if (builder.finalized_)
    throw ContractError("finalize_episode called twice without reset");
  if (builder.seen_ == 0) {  // nothing to pad
    builder.finalized_ = true;
    return 0;
  }
  if (!builder.last_terminal_)
    throw ContractError("finalize_episode: last transition was not terminal");

  WindowBuilder::Triplet pad = builder.last_triplet_;
  pad.padded = true;

  std::size_t emitted = 0;
  for (int k = 0; k < builder.window_; ++k) {
    builder.pending_.push_back(pad);
    if (builder.pending_.size() < static_cast<std::size_t>(builder.window_))
      continue;
    if (builder.pending_.front().padded) break;  // fully padded window: drop
    buffer.push(builder.assemble());
    builder.pending_.pop_front();
    ++emitted;
  }
  builder.pending_.clear();
  builder.finalized_ = true;
  return emitted;
}

RingBuffer::RingBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("RingBuffer: capacity must be positive");
}

const MultiStateSample& RingBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw ContractError("RingBuffer::at: index out of range");
  if (storage_.size() < capacity_) return storage_[i];
  return storage_[(cursor_ + i) % capacity_];
}

void RingBuffer::push(MultiStateSample sample) {
  if (!storage_.empty() && sample.states.size() != storage_.front().states.size())
    throw ContractError("RingBuffer::push: sample window length mismatch");
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(sample));
    return;
  }
  storage_[cursor_] = std::move(sample);
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<MultiStateSample> sample_minibatch(const RingBuffer& buffer,
                                               std::size_t n,
                                               std::mt19937_64& gen) {
  if (n > buffer.size())
    throw ContractError("sample_minibatch: not enough samples in the buffer");
  std::vector<std::uint8_t> taken(buffer.size(), 0);
  std::vector<MultiStateSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i;
    do {
      i = uniform_index(gen, buffer.size());
    } while (taken[i]);
    taken[i] = 1;
    out.push_back(buffer.at(i));
  }
  return out;
}

void dump_buffer(const RingBuffer& buffer, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);

  std::uint32_t window = 0, obs_dim = 0, act_dim = 0;
  if (buffer.size() > 0) {
    const MultiStateSample& first = buffer.at(0);
    window = static_cast<std::uint32_t>(first.actions.size());
    obs_dim = static_cast<std::uint32_t>(first.states.front().size());
    act_dim = static_cast<std::uint32_t>(first.actions.front().size());
  }
  put_u32(out, window);
  put_u32(out, obs_dim);
  put_u32(out, act_dim);
  put_u64(out, buffer.size());

  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const MultiStateSample& s = buffer.at(i);
    for (const StateVec& v : s.states) {
      if (v.size() != obs_dim) throw ContractError("dump_buffer: ragged state dims");
      for (double x : v) put_f64(out, x);
    }
    for (const ActionVec& v : s.actions) {
      if (v.size() != act_dim) throw ContractError("dump_buffer: ragged action dims");
      for (double x : v) put_f64(out, x);
    }
    for (double r : s.rewards) put_f64(out, r);
    for (std::uint8_t f : s.pad_flags) out.put(f ? 1 : 0);
    out.put(s.terminal_flag ? 1 : 0);
  }
  if (!out) throw ConfigError("write failed: " + path);
}

RingBuffer restore_buffer(const std::string& path, std::size_t capacity) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open buffer file: " + path);

  std::uint32_t window = get_u32(in);
  std::uint32_t obs_dim = get_u32(in);
  std::uint32_t act_dim = get_u32(in);
  std::uint64_t count = get_u64(in);
  if (!in) throw ConfigError("truncated buffer header: " + path);

  if (capacity == 0) capacity = std::max<std::size_t>(100000, count);
  if (count > capacity)
    throw ConfigError("buffer file holds more samples than the requested capacity");

  RingBuffer buffer(capacity);
  for (std::uint64_t i = 0; i < count; ++i) {
    MultiStateSample s;
    s.states.resize(window + 1);
    for (auto& v : s.states) {
      v.resize(obs_dim);
      for (auto& x : v) x = get_f64(in);
    }
    s.actions.resize(window);
    for (auto& v : s.actions) {
      v.resize(act_dim);
      for (auto& x : v) x = get_f64(in);
    }
    s.rewards.resize(window);
    for (auto& r : s.rewards) r = get_f64(in);
    s.pad_flags.resize(window);
    for (auto& f : s.pad_flags) f = static_cast<std::uint8_t>(in.get());
    s.terminal_flag = in.get() != 0;
    if (!in) throw ConfigError("truncated buffer record in " + path);
    auto bad = validate_sample(s, static_cast<int>(window));
    if (!bad.empty())
      throw ConfigError("corrupt sample in " + path + ": " + bad.front());
    buffer.push(std::move(s));
  }
  return buffer;
}

}  // namespace mstd
