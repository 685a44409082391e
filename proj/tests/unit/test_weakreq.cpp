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

#include "doctest.h"

#include "tangletrs/weakreq.hpp"

using namespace tangletrs;

namespace {

HashDigest tag(std::uint64_t n)
{
  Encoder e;
  e.u64(n);
  return sha3_512(e.data());
}

/// Single miner that anchors any request whose fee reaches its threshold
/// after a fixed delay.
class ScriptedGateway : public Gateway
{
public:
  ScriptedGateway(UtxoSet &ledger, Money threshold)
    : ledger_{ledger}
    , threshold_{threshold}
    , miner_{KeyPair::derive("gw-miner", 1)}
  {}

  std::uint64_t now() const override { return now_; }

  void broadcast(WeakReqRequest const &req) override
  {
    broadcasts.push_back(req);
    if (req.fee_total >= threshold_ && check_request(req, ledger_, {}) == RequestFault::Ok)
    {
      pending_ = std::pair{now_ + 3, req};
    }
  }

  std::optional<AnchorNotice> wait_for_anchor(std::uint64_t deadline) override
  {
    if (pending_ && pending_->first <= deadline)
    {
      now_ = pending_->first;
      auto req = pending_->second;
      pending_.reset();
      service.on_anchored(req);
      return AnchorNotice{req.id(), miner_.id()};
    }
    now_ = deadline;
    return std::nullopt;
  }

  bool deliver(WeakReqMessage const &msg) override
  {
    auto r = service.serve(miner_, msg, ledger_, tangle, rng_, now_, 4);
    return r.fault == ServeFault::Ok;
  }

  UtxoSet const &ledger() const override { return ledger_; }

  NodeId miner_id() const { return miner_.id(); }

  std::vector<WeakReqRequest> broadcasts;
  WeakReqService service;
  TangleState tangle;

private:
  UtxoSet &ledger_;
  Money threshold_;
  MessageAuthor miner_;
  std::uint64_t now_{0};
  std::optional<std::pair<std::uint64_t, WeakReqRequest>> pending_;
  Rng rng_ = make_rng(1);
};

struct Fixture
{
  UtxoSet ledger;
  KeyPair device_keys = KeyPair::derive("device", 1);
  ProofOfBurn pob;

  Fixture()
  {
    ledger.mint(device_keys.id(), Money{1000}, tag(1));
    auto p = create_pob(device_keys, ledger, Money{10}, 1);
    ledger.apply(p.bundle);
    pob = p.pob;
  }
};

Bytes payload(std::uint32_t i)
{
  return Bytes{static_cast<std::uint8_t>(i)};
}

}  // namespace

TEST_CASE("fee split floors and puts the remainder last")
{
  CHECK(fee_share(Money{100}, 10, 1) == Money{10});
  CHECK(fee_share(Money{100}, 10, 10) == Money{10});
  CHECK(fee_share(Money{101}, 10, 9) == Money{10});
  CHECK(fee_share(Money{101}, 10, 10) == Money{11});
  CHECK(fee_share(Money{101}, 10, 11) == Money{0});
  std::uint64_t total = 0;
  for (std::uint32_t i = 1; i <= 7; ++i)
  {
    total += fee_share(Money{50}, 7, i).units();
  }
  CHECK(total == 50);
}

TEST_CASE("profitability policy")
{
  WeakReqRequest rich;
  rich.fee_total = Money{100};
  rich.n_msg = 10;
  WeakReqRequest poor;
  poor.fee_total = Money{1};
  poor.n_msg = 1000;
  CHECK(is_profitable(rich, Money{1}));
  CHECK_FALSE(is_profitable(poor, Money{1}));
}

TEST_CASE("create_pob conserves value and burned coins are frozen")
{
  UtxoSet u;
  auto k = KeyPair::derive("w", 1);
  u.mint(k.id(), Money{10}, tag(1));
  auto p = create_pob(k, u, Money{5}, 1);
  u.apply(p.bundle);
  CHECK(u.balance(k.id()) == Money{5});
  CHECK(u.burned() == Money{5});
  auto spend = build_spend(k, {p.pob.output()}, {TxOutput{k.id(), Money{5}, {}}}, 2);
  CHECK(u.validate(spend).fault == BundleFault::Unspendable);
  CHECK_THROWS_AS(create_pob(k, u, Money{6}, 3), Error);
}

TEST_CASE("sequential burns reduce the balance monotonically")
{
  UtxoSet u;
  auto k = KeyPair::derive("w", 2);
  u.mint(k.id(), Money{10000}, tag(1));
  std::uint64_t burned = 0;
  auto last = u.balance(k.id());
  for (std::uint64_t i = 1; i <= 100; ++i)
  {
    auto p = create_pob(k, u, Money{i}, i);
    u.apply(p.bundle);
    burned += i;
    auto now = u.balance(k.id());
    CHECK(now < last);
    CHECK(now.units() == 10000 - burned);
    last = now;
  }
  CHECK(u.burned().units() == burned);
}

TEST_CASE("request well-formedness")
{
  Fixture f;
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 10, Money{10}, 5}, {}, f.pob};
  auto req = dev.start(0);
  CHECK(check_request(req, f.ledger, {}) == RequestFault::Ok);
  CHECK(WeakReqRequest::decode(req.canonical_bytes()).id() == req.id());

  auto tampered = req;
  tampered.fee_total = Money{30};
  CHECK(check_request(tampered, f.ledger, {}) == RequestFault::BadSignature);

  // Burn too small for 20 messages.
  WeakDevice big{f.device_keys, WeakReqParams{Money{40}, 20, Money{10}, 5}, {}, f.pob};
  CHECK(check_request(big.start(0), f.ledger, {}) == RequestFault::BadBurn);

  // Somebody else's burn.
  auto thief = KeyPair::derive("device", 2);
  WeakDevice stolen{thief, WeakReqParams{Money{20}, 10, Money{10}, 5}, {}, f.pob};
  CHECK(check_request(stolen.start(0), f.ledger, {}) == RequestFault::BadBurn);
}

TEST_CASE("happy path: anchored on first broadcast")
{
  Fixture f;
  ScriptedGateway gw{f.ledger, Money{10}};
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 10, Money{10}, 5}, {}, f.pob};
  auto before = f.ledger.balance(f.device_keys.id());
  auto out = device_run(dev, gw, payload);
  CHECK(out.status == Errc::Ok);
  CHECK(out.broadcasts == 1);
  CHECK(out.acknowledged == 10);
  CHECK(dev.state() == DeviceState::Done);
  CHECK(gw.service.collected() == Money{20});
  CHECK(f.ledger.balance(gw.miner_id()) == Money{20});
  CHECK(f.ledger.balance(f.device_keys.id()) == before - Money{20});
  // Every attached message carries a served WeakReq message.
  std::size_t attached = 0;
  for (auto const &id : gw.tangle.attachment_order())
  {
    if (auto m = carried_weakreq(gw.tangle.message(id)))
    {
      ++attached;
      CHECK(m->request == *dev.live_request());
    }
  }
  CHECK(attached == 10);
}

TEST_CASE("unwilling device abandons")
{
  Fixture f;
  ScriptedGateway gw{f.ledger, Money{1000}};
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 10, Money{10}, 5}, EscalationPolicy{2.0, 1}, f.pob};
  auto out = device_run(dev, gw, payload);
  CHECK(out.status == Errc::Abandoned);
  CHECK(out.broadcasts == 1);
  CHECK(gw.service.collected() == Money{0});
}

TEST_CASE("one doubling gets anchored after exactly one re-broadcast")
{
  Fixture f;
  ScriptedGateway gw{f.ledger, Money{30}};
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 10, Money{10}, 5}, EscalationPolicy{2.0, 2}, f.pob};
  auto out = device_run(dev, gw, payload);
  CHECK(out.status == Errc::Ok);
  CHECK(out.broadcasts == 2);
  CHECK(out.final_fee == Money{40});
  REQUIRE(gw.broadcasts.size() == 2);
  CHECK(gw.broadcasts[1].fee_total > gw.broadcasts[0].fee_total);
  CHECK(gw.service.collected() == Money{40});
}

TEST_CASE("superseded request anchoring is stale")
{
  Fixture f;
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 2, Money{10}, 5}, EscalationPolicy{2.0, 3}, f.pob};
  auto first = dev.start(0);
  auto second = dev.on_tick(5);
  REQUIRE(second.has_value());
  CHECK(dev.on_anchored(first.id(), NodeId{}) == Errc::StaleRequest);
  CHECK(dev.state() == DeviceState::Waiting);
  CHECK(dev.on_anchored(second->id(), NodeId{}) == Errc::Ok);
}

TEST_CASE("miner rejects malformed messages")
{
  Fixture f;
  ScriptedGateway gw{f.ledger, Money{10}};
  MessageAuthor miner{KeyPair::derive("gw-miner", 1)};
  MessageAuthor rival{KeyPair::derive("gw-miner", 2)};
  WeakDevice dev{f.device_keys, WeakReqParams{Money{20}, 2, Money{10}, 5}, {}, f.pob};
  auto req = dev.start(0);
  gw.service.on_anchored(req);
  REQUIRE(dev.on_anchored(req.id(), miner.id()) == Errc::Ok);
  auto rng = make_rng(2);

  auto m1 = dev.make_message(1, payload(1), f.ledger);
  SUBCASE("wrong miner")
  {
    CHECK(gw.service.serve(rival, m1, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::WrongMiner);
  }
  SUBCASE("over quota")
  {
    auto m = m1;
    m.index = 3;
    m.signature = f.device_keys.sign(m.signed_bytes());
    CHECK(gw.service.serve(miner, m, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::OverQuota);
  }
  SUBCASE("bad signature")
  {
    auto m = m1;
    m.payload.push_back(1);
    CHECK(gw.service.serve(miner, m, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::BadSignature);
  }
  SUBCASE("underpaid")
  {
    auto m = m1;
    m.fee_share = Money{1};
    m.fee_bundle = build_payment(f.device_keys, f.ledger, {TxOutput{miner.id(), Money{1}, {}}}, 77);
    m.signature = f.device_keys.sign(m.signed_bytes());
    CHECK(gw.service.serve(miner, m, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::UnderpaidShare);
  }
  SUBCASE("duplicate index")
  {
    CHECK(gw.service.serve(miner, m1, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::Ok);
    CHECK(gw.service.serve(miner, m1, f.ledger, gw.tangle, rng, 2, 4).fault == ServeFault::BadIndex);
    CHECK(gw.service.collected() == Money{10});
  }
  SUBCASE("unknown request")
  {
    auto m = m1;
    m.request = tag(4);
    m.signature = f.device_keys.sign(m.signed_bytes());
    CHECK(gw.service.serve(miner, m, f.ledger, gw.tangle, rng, 1, 4).fault == ServeFault::UnknownRequest);
  }
}

TEST_CASE("self-service leaves no gain")
{
  // A device that mines its own request pays its fee to itself and has
  // still burned the PoB.
  UtxoSet u;
  auto self = KeyPair::derive("self", 1);
  u.mint(self.id(), Money{100}, tag(1));
  auto p = create_pob(self, u, Money{10}, 1);
  u.apply(p.bundle);
  WeakReqService svc;
  MessageAuthor as_miner{self};
  WeakDevice dev{self, WeakReqParams{Money{20}, 2, Money{10}, 5}, {}, p.pob};
  auto req = dev.start(0);
  svc.on_anchored(req);
  REQUIRE(dev.on_anchored(req.id(), self.id()) == Errc::Ok);
  TangleState t;
  auto rng = make_rng(3);
  for (std::uint32_t i = 1; i <= 2; ++i)
  {
    auto m = dev.make_message(i, payload(i), u);
    CHECK(svc.serve(as_miner, m, u, t, rng, i, 4).fault == ServeFault::Ok);
  }
  CHECK(u.balance(self.id()) <= Money{100});
  CHECK(u.balance(self.id()) == Money{90});
}
