// Copyright 2026 The tangletrs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tangletrs/bench.hpp"

#include "tangletrs/tangle.hpp"
#include "tangletrs/weakreq.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tangletrs {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint32_t kWeakMessages = 1u << 30;

HashDigest mint_tag(std::uint64_t seed, std::uint32_t node)
{
  Encoder e;
  e.str("bench/mint").u64(seed).u32(node);
  return sha3_512(e.take());
}

std::uint64_t pow_worker(TangleState &tangle, std::mutex &lock, unsigned bits, std::uint64_t seed,
                         std::uint32_t node, Clock::time_point deadline)
{
  MessageAuthor author{KeyPair::derive("bench/node", seed, node)};
  auto rng = make_rng(seed, node);
  PowOptions opts;
  opts.should_stop = [deadline] { return Clock::now() >= deadline; };
  std::uint64_t attached = 0;
  for (std::uint64_t n = 1; Clock::now() < deadline; ++n)
  {
    MessageDraft draft;
    {
      std::lock_guard guard{lock};
      draft.parents = tangle.select_tips(rng);
    }
    Encoder payload;
    payload.u32(node).u64(n);
    draft.payload = payload.take();
    draft.timestamp = n;
    TangleMessage msg;
    try
    {
      msg = author.emit(std::move(draft), bits, opts);
    }
    catch (Error const &e)
    {
      if (e.code() == Errc::Interrupted)
      {
        break;
      }
      throw;
    }
    std::lock_guard guard{lock};
    if (tangle.try_attach(msg) == Errc::Ok)
    {
      ++attached;
    }
  }
  return attached;
}

std::uint64_t weakreq_worker(std::uint64_t seed, std::uint32_t node, Clock::time_point deadline)
{
  auto const device_keys = KeyPair::derive("bench/device", seed, node);
  MessageAuthor miner{KeyPair::derive("bench/miner", seed, node)};
  UtxoSet ledger;
  TangleState tangle;
  auto rng = make_rng(seed, node);

  ledger.mint(device_keys.id(), Money{std::uint64_t{1} << 40}, mint_tag(seed, node));
  auto burn = create_pob(device_keys, ledger, Money{10}, 1);
  ledger.apply(burn.bundle);

  WeakReqParams params{Money{kWeakMessages}, kWeakMessages, Money{10}, 50};
  WeakDevice device{device_keys, params, EscalationPolicy{}, burn.pob};
  WeakReqService service;
  auto const req = device.start(0);
  service.on_anchored(req);
  device.on_anchored(req.id(), miner.id());

  std::uint64_t served = 0;
  for (std::uint32_t i = 1; i <= kWeakMessages && Clock::now() < deadline; ++i)
  {
    Encoder payload;
    payload.u32(node).u32(i);
    auto msg = device.make_message(i, payload.take(), ledger);
    auto result = service.serve(miner, msg, ledger, tangle, rng, i, tangle.config().min_pow_bits);
    if (result.fault == ServeFault::Ok)
    {
      device.on_ack(i);
      ++served;
    }
  }
  return served;
}

}  // namespace

std::string_view to_string(BenchClass c)
{
  switch (c)
  {
  case BenchClass::Pow15: return "pow15";
  case BenchClass::Pow20: return "pow20";
  case BenchClass::WeakReq: return "weakreq";
  }
  return "unknown";
}

std::optional<BenchClass> parse_bench_class(std::string_view name)
{
  for (auto c : {BenchClass::Pow15, BenchClass::Pow20, BenchClass::WeakReq})
  {
    if (to_string(c) == name)
    {
      return c;
    }
  }
  return std::nullopt;
}

BenchResult run_bench(BenchSpec const &spec)
{
  if (spec.node_count == 0)
  {
    throw Error(Errc::InvalidArgument, "node count must be at least 1");
  }
  if (!(spec.seconds > 0.0))
  {
    throw Error(Errc::InvalidArgument, "duration must be positive");
  }

  TangleState tangle{TangleConfig{spec.message_class == BenchClass::Pow20 ? 20u : 15u}};
  std::mutex lock;
  std::vector<std::uint64_t> counts(spec.node_count, 0);
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto const start = Clock::now();
  auto const deadline =
    start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(spec.seconds));
  for (std::uint32_t node = 0; node < spec.node_count; ++node)
  {
    workers.emplace_back([&, node] {
      try
      {
        switch (spec.message_class)
        {
        case BenchClass::Pow15:
          counts[node] = pow_worker(tangle, lock, 15, spec.seed, node, deadline);
          break;
        case BenchClass::Pow20:
          counts[node] = pow_worker(tangle, lock, 20, spec.seed, node, deadline);
          break;
        case BenchClass::WeakReq:
          counts[node] = weakreq_worker(spec.seed, node, deadline);
          break;
        }
      }
      catch (...)
      {
        std::lock_guard guard{failure_lock};
        failure = std::current_exception();
      }
    });
  }
  for (auto &w : workers)
  {
    w.join();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }

  BenchResult result;
  result.spec = spec;
  result.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  for (auto c : counts)
  {
    result.messages += c;
  }
  result.tps = static_cast<double>(result.messages) / result.elapsed;
  return result;
}

}  // namespace tangletrs
