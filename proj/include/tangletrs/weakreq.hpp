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

#pragma once

#include "tangletrs/core.hpp"
#include "tangletrs/random.hpp"
#include "tangletrs/tangle.hpp"
#include "tangletrs/trade.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace tangletrs {

struct WeakReqConfig
{
  Money min_fee_unit{1};  ///< per requested message
  Money burn_floor{1};  ///< per requested message
  /// Miner profitability floor: a request is served iff fee_total / n_msg >= min_share.
  Money min_share{2};
};

struct WeakReqRequest
{
  NodeId sender;
  Money fee_total;
  std::uint32_t n_msg{1};
  ProofOfBurn pob;
  std::uint64_t timer_interval{0};
  std::uint32_t attempt{1};  ///< 1 for the first broadcast, +1 per escalation
  Signature signature;

  Bytes signed_bytes() const;
  Bytes canonical_bytes() const;
  HashDigest id() const;

  static WeakReqRequest decode(ByteView bytes);
};

void encode(Encoder &e, WeakReqRequest const &r);
WeakReqRequest decode_request(Decoder &d);

enum class RequestFault : std::uint8_t
{
  Ok = 0,
  Malformed,
  BadSignature,
  FeeBelowMinimum,
  BadBurn,
};

std::string_view to_string(RequestFault f);

/// Stateless well-formedness: signature, n_msg, fee floor and PoB. Reuse of a
/// PoB is a per-fork property checked by the chain.
RequestFault check_request(WeakReqRequest const &req, UtxoSet const &ledger,
                           WeakReqConfig const &config);

/// The default profitability policy.
bool is_profitable(WeakReqRequest const &req, Money min_share);

/// Fee carried by message `index` (1-based): floor share, remainder on the last.
Money fee_share(Money fee_total, std::uint32_t n_msg, std::uint32_t index);

struct WeakReqMessage
{
  HashDigest request{};
  std::uint32_t index{0};
  NodeId recipient_miner;
  Money fee_share;
  Bytes payload;
  Bundle fee_bundle;  ///< pays fee_share to the recipient miner
  Signature signature;

  Bytes signed_bytes() const;
  Bytes canonical_bytes() const;

  static WeakReqMessage decode(ByteView bytes);
};

struct PobBundle
{
  Bundle bundle;
  ProofOfBurn pob;
};

/// Builds a bundle paying `amount` to the burn address (change back to the
/// wallet). The proof becomes valid once the bundle is applied.
PobBundle create_pob(KeyPair const &wallet, UtxoSet const &ledger, Money amount, std::uint64_t nonce);

//------------------------------------------------------------------------------
// Device side
//------------------------------------------------------------------------------

struct WeakReqParams
{
  Money fee{10};
  std::uint32_t n_msg{10};
  Money burn{10};
  std::uint64_t timer_ticks{50};
};

struct EscalationPolicy
{
  /// Fee multiplier applied on every re-broadcast; must exceed 1 to escalate.
  double factor{2.0};
  /// Total broadcasts allowed, including the first.
  std::uint32_t max_attempts{1};
};

enum class DeviceState : std::uint8_t
{
  Idle,
  Waiting,
  Sending,
  Done,
  Abandoned,
};

class WeakDevice
{
public:
  WeakDevice(KeyPair keys, WeakReqParams params, EscalationPolicy policy, ProofOfBurn pob);

  NodeId const &id() const { return keys_.id(); }
  DeviceState state() const { return state_; }
  std::uint32_t attempts() const { return attempt_; }
  Money current_fee() const { return fee_; }
  std::optional<NodeId> miner() const { return miner_; }
  std::optional<HashDigest> live_request() const { return live_; }
  std::uint64_t deadline() const { return deadline_; }

  /// First broadcast. Starts the timer.
  WeakReqRequest start(std::uint64_t now);

  /// Timer check. On expiry returns a re-broadcast with a strictly higher fee
  /// or moves to Abandoned when the policy forbids another attempt.
  std::optional<WeakReqRequest> on_tick(std::uint64_t now);

  /// Anchoring notice from the gateway. StaleRequest for superseded requests.
  Errc on_anchored(HashDigest const &request_id, NodeId const &miner);

  /// Builds message `index` once anchored; the fee bundle spends from `ledger`.
  WeakReqMessage make_message(std::uint32_t index, Bytes payload, UtxoSet const &ledger);

  /// Records an acknowledgment; moves to Done after the last one.
  void on_ack(std::uint32_t index);

  std::uint32_t acked() const { return acked_; }
  std::uint32_t n_msg() const { return params_.n_msg; }

private:
  WeakReqRequest build_request();

  KeyPair keys_;
  WeakReqParams params_;
  EscalationPolicy policy_;
  ProofOfBurn pob_;
  DeviceState state_{DeviceState::Idle};
  Money fee_;
  std::uint32_t attempt_{0};
  std::uint64_t deadline_{0};
  std::optional<HashDigest> live_;
  std::set<HashDigest> superseded_;
  std::optional<NodeId> miner_;
  std::uint32_t acked_{0};
  std::uint64_t bundle_nonce_{0};
};

struct AnchorNotice
{
  HashDigest request;
  NodeId miner;
};

/// The device's only view of the network.
class Gateway
{
public:
  virtual ~Gateway() = default;

  virtual std::uint64_t now() const = 0;
  virtual void broadcast(WeakReqRequest const &req) = 0;
  /// Advances the clock up to `deadline` and returns the first anchoring
  /// notice, if any.
  virtual std::optional<AnchorNotice> wait_for_anchor(std::uint64_t deadline) = 0;
  /// Delivers a message; returns true when the miner acknowledged it.
  virtual bool deliver(WeakReqMessage const &msg) = 0;
  virtual UtxoSet const &ledger() const = 0;
};

struct DeviceOutcome
{
  Errc status{Errc::Ok};
  std::uint32_t broadcasts{0};
  std::uint32_t acknowledged{0};
  std::uint32_t stale_notices{0};
  Money final_fee;
  std::optional<NodeId> miner;
};

/// Runs the device protocol to completion: broadcast, escalate on timer
/// expiry, then send every message to the anchoring miner.
DeviceOutcome device_run(WeakDevice &device, Gateway &gateway,
                         std::function<Bytes(std::uint32_t)> const &payload_for);

//------------------------------------------------------------------------------
// Miner side
//------------------------------------------------------------------------------

enum class ServeFault : std::uint8_t
{
  Ok = 0,
  UnknownRequest,
  BadIndex,
  OverQuota,
  WrongMiner,
  BadSignature,
  UnderpaidShare,
};

std::string_view to_string(ServeFault f);

struct ServeResult
{
  ServeFault fault{ServeFault::Ok};
  std::optional<TangleMessage> attached;
};

/// Per-miner bookkeeping for requests anchored in the miner's own blocks.
class WeakReqService
{
public:
  explicit WeakReqService(WeakReqConfig config = {})
    : config_{config}
  {}

  /// Registers a request anchored in a canonical block mined by this miner.
  void on_anchored(WeakReqRequest const &req);
  bool is_anchored(HashDigest const &request_id) const { return anchored_.contains(request_id); }

  /// Validates the message and, if valid, collects the fee share and attaches
  /// a WeakReqAttached message carrying it.
  ServeResult serve(MessageAuthor &miner, WeakReqMessage const &msg, UtxoSet &ledger,
                    TangleState &tangle, Rng &rng, std::uint64_t now, unsigned pow_bits);

  Money collected() const { return collected_; }
  std::uint32_t served(HashDigest const &request_id) const;

private:
  struct Anchored
  {
    WeakReqRequest request;
    std::set<std::uint32_t> served;
  };

  WeakReqConfig config_;
  std::map<HashDigest, Anchored> anchored_;
  Money collected_{};
};

/// Decodes the WeakReqMessage carried by an attached Tangle message.
std::optional<WeakReqMessage> carried_weakreq(TangleMessage const &msg);

}  // namespace tangletrs
