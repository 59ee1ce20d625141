#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "harmmtd/error.hpp"
#include "harmmtd/protocol/wire.hpp"
#include "protocol_rig.hpp"

using namespace harmmtd;
using namespace harmmtd::proto;
using crypto::Suite;
using fx::code_of;

namespace {

const Strategy kMoveVm7 = Strategy::live_migrate("VM7", "host-2");

template <typename T>
T tampered(T msg, Bytes T::*field, std::size_t pos) {
  (msg.*field).at(pos) ^= 0x01;
  return msg;
}

}  // namespace

TEST(Registration, RequestDecryptsToCodeAndKey) {
  rig::Rig r;
  const EnterpriseClient c = r.client(rig::kEp1Code, 0);
  const RegistrationRequest req = c.build_registration_request();
  const auto fields = wire::decode_fields(crypto::open(fx::provider_keys(), req.ciphertext), 2);
  EXPECT_EQ(wire::to_text(fields[0]), "EP1-SECRET");
  EXPECT_EQ(fields[1], fx::enterprise_keys(0).public_key().der());
  EXPECT_EQ(code_of([&] { crypto::open(fx::enterprise_keys(1), req.ciphertext); }), ErrorCode::DecryptionFailure);
}

TEST(Registration, EpCodeLengthBounds) {
  rig::Rig r;
  EXPECT_THROW(r.client("short", 0).build_registration_request(), std::invalid_argument);
  EXPECT_THROW(r.client(std::string(65, 'x'), 0).build_registration_request(), std::invalid_argument);
  EXPECT_NO_THROW(r.client(std::string(64, 'x'), 0).build_registration_request());
}

TEST(Registration, InstallsSameKeyOnBothEnds) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  EXPECT_FALSE(c.registered());
  r.register_client(c);
  ASSERT_TRUE(c.registered());
  const auto session = r.provider->session_for("EP1");
  ASSERT_TRUE(session.has_value());
  EXPECT_EQ(session->shared_key, *c.keys().shared_key);
  EXPECT_EQ(session->id, 1u);
}

TEST(Registration, UnknownCodeIsSignedDenial) {
  rig::Rig r;
  EnterpriseClient c = r.client("NOT-ENROLLED", 0);
  const ReplyMessage reply = r.provider->process_registration(c.build_registration_request(), r.suite);
  EXPECT_EQ(reply.ack, kDenied);
  EXPECT_TRUE(reply.enc_shared_key.empty());
  EXPECT_EQ(code_of([&] { c.accept_reply(reply); }), ErrorCode::RegistrationDenied);
  EXPECT_FALSE(c.registered());
  EXPECT_EQ(r.provider->sessions_created(), 0u);
}

TEST(Registration, GarbageCiphertextIsProtocolError) {
  rig::Rig r;
  EXPECT_EQ(code_of([&] { r.provider->process_registration({Bytes(300, 1)}, r.suite); }), ErrorCode::ProtocolError);
  // Well-formed encryption of a malformed plaintext.
  const Bytes junk = crypto::seal(fx::provider_keys().public_key(), Bytes{0, 9, 1});
  EXPECT_EQ(code_of([&] { r.provider->process_registration({junk}, r.suite); }), ErrorCode::ProtocolError);
}

TEST(Registration, SecondRegistrationRekeys) {
  rig::Rig r;
  EnterpriseClient first = r.client(rig::kEp1Code, 0);
  r.register_client(first);
  EnterpriseClient second = r.client(rig::kEp1Code, 0);
  r.register_client(second);
  EXPECT_NE(*first.keys().shared_key, *second.keys().shared_key);
  EXPECT_EQ(r.provider->session_for("EP1")->shared_key, *second.keys().shared_key);
  EXPECT_EQ(r.provider->sessions_created(), 2u);
  // The replaced key no longer decrypts on the provider.
  EXPECT_EQ(r.send(first, kMoveVm7).rejection, ErrorCode::DecryptionFailure);
  EXPECT_FALSE(r.send(second, kMoveVm7).rejection.has_value());
}

TEST(Reply, TamperAndReplayAreDistinctErrors) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  const ReplyMessage reply = r.provider->process_registration(c.build_registration_request(), r.suite);
  EXPECT_EQ(code_of([&] { c.accept_reply(tampered(reply, &ReplyMessage::enc_shared_key, 10)); }),
            ErrorCode::DigestMismatch);
  ReplyMessage bad_ack = reply;
  bad_ack.ack = "REGISTERES";
  EXPECT_EQ(code_of([&] { c.accept_reply(bad_ack); }), ErrorCode::DigestMismatch);
  EXPECT_EQ(code_of([&] { c.accept_reply(tampered(reply, &ReplyMessage::signature_block, 3)); }),
            ErrorCode::SignatureInvalid);
  EXPECT_EQ(code_of([&] { c.accept_reply(tampered(reply, &ReplyMessage::signature_block, 20)); }),
            ErrorCode::SignatureInvalid);
  EXPECT_FALSE(c.registered());
  EXPECT_NO_THROW(c.accept_reply(reply));
  EXPECT_EQ(code_of([&] { c.accept_reply(reply); }), ErrorCode::ReplayedNonce);
}

TEST(Strategy, ExecutesAndAcks) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const FurtherMessage msg = c.build_strategy_message(kMoveVm7);
  const StrategyOutcome out = r.provider->process_strategy(msg, r.suite);
  EXPECT_FALSE(out.rejection.has_value()) << out.ack.reason;
  EXPECT_EQ(out.tenant, "EP1");
  EXPECT_EQ(r.provider->snapshot().find_vm("VM7")->host_id, "host-2");
  const auto nonce = parse_signature_block(r.suite, msg.signature_block).nonce;
  EXPECT_EQ(out.ack.in_reply_to, Bytes(nonce.begin(), nonce.end()));
  const AckResult ack = c.accept_ack(out.ack);
  EXPECT_TRUE(ack.success);
  EXPECT_EQ(code_of([&] { c.accept_ack(out.ack); }), ErrorCode::ReplayedNonce);
}

TEST(Strategy, ReplayIsRejectedWithoutSecondExecution) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const FurtherMessage msg = c.build_strategy_message(kMoveVm7);
  ASSERT_FALSE(r.provider->process_strategy(msg, r.suite).rejection.has_value());
  const CloudState after_first = r.provider->snapshot();
  const StrategyOutcome replay = r.provider->process_strategy(msg, r.suite);
  EXPECT_EQ(replay.rejection, ErrorCode::ReplayedNonce);
  EXPECT_EQ(replay.ack.status, kFailure);
  EXPECT_EQ(r.provider->snapshot(), after_first);
  EXPECT_FALSE(c.accept_ack(replay.ack).success);
}

TEST(Strategy, CrossTenantIsUnauthorized) {
  rig::Rig r;
  EnterpriseClient ep1 = r.client(rig::kEp1Code, 0);
  EnterpriseClient ep2 = r.client(rig::kEp2Code, 1);
  r.register_client(ep1);
  r.register_client(ep2);
  const CloudState before = r.provider->snapshot();
  const auto out = r.send(ep1, Strategy::live_migrate("EP2-VM0", "host-2"));
  EXPECT_EQ(out.rejection, ErrorCode::Unauthorized);
  EXPECT_NE(out.ack.reason.find("Unauthorized"), std::string::npos);
  EXPECT_EQ(r.provider->snapshot(), before);
  EXPECT_EQ(r.send(ep2, Strategy::patch("EP1-DB", "CVE-2018-15126")).rejection, ErrorCode::Unauthorized);
  EXPECT_EQ(r.provider->snapshot(), before);
  EXPECT_FALSE(r.send(ep1, Strategy::patch("EP1-DB", "CVE-2018-15126")).rejection.has_value());
  EXPECT_FALSE(r.send(ep2, Strategy::live_migrate("EP2-VM0", "host-2")).rejection.has_value());
}

TEST(Strategy, ExecutionFailuresSurfaceInAck) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const CloudState before = r.provider->snapshot();
  auto out = r.send(c, Strategy::live_migrate("VM7", "host-5"));
  EXPECT_EQ(out.rejection, ErrorCode::ExecutionFailed);
  EXPECT_NE(out.ack.reason.find("CapacityExceeded"), std::string::npos) << out.ack.reason;
  out = r.send(c, Strategy::live_migrate("VM7", "host-99"));
  EXPECT_EQ(out.rejection, ErrorCode::ExecutionFailed);
  out = r.send(c, Strategy::patch("VM7", "CVE-0000-0000"));
  EXPECT_EQ(out.rejection, ErrorCode::ExecutionFailed);
  EXPECT_EQ(r.provider->snapshot(), before);
  const AckResult ack = c.accept_ack(out.ack);
  EXPECT_FALSE(ack.success);
}

TEST(Strategy, NonJsonPayloadIsRejected) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const std::string junk = "not json";
  const auto out = r.provider->process_strategy(
      c.build_payload_message(crypto::ByteView(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size())),
      r.suite);
  EXPECT_EQ(out.rejection, ErrorCode::ProtocolError);
}

TEST(Strategy, UnregisteredSenderIsSignatureInvalid) {
  rig::Rig r;
  EnterpriseClient registered = r.client(rig::kEp1Code, 0);
  r.register_client(registered);
  KeyMaterial km;
  km.keypair = fx::enterprise_keys(2);
  km.ep_code = rig::kEp1Code;
  km.shared_key = registered.keys().shared_key;
  EnterpriseClient stranger(km, fx::provider_keys().public_key(), r.suite);
  EXPECT_EQ(r.send(stranger, kMoveVm7).rejection, ErrorCode::SignatureInvalid);
  EXPECT_EQ(code_of([&] { EnterpriseClient(r.client(rig::kEp1Code, 0)).build_strategy_message(kMoveVm7); }),
            ErrorCode::ProtocolError);
}

TEST(Session, IdleExpiry) {
  rig::Rig r(Suite::Md5Compat, std::chrono::seconds(300));
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  r.advance(std::chrono::seconds(200));
  EXPECT_FALSE(r.send(c, Strategy::patch("VM7", "CVE-2018-15126")).rejection.has_value());
  r.advance(std::chrono::seconds(299));
  EXPECT_FALSE(r.send(c, Strategy::patch("VM7", "CVE-2018-14633")).rejection.has_value());
  r.advance(std::chrono::seconds(301));
  EXPECT_EQ(r.send(c, kMoveVm7).rejection, ErrorCode::SessionExpired);
  EXPECT_FALSE(r.provider->session_for("EP1").has_value());
  r.register_client(c);
  EXPECT_FALSE(r.send(c, kMoveVm7).rejection.has_value());
}

TEST(Suites, ModernWorksEndToEnd) {
  rig::Rig r(Suite::Modern);
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const auto out = r.send(c, kMoveVm7);
  EXPECT_FALSE(out.rejection.has_value());
  EXPECT_TRUE(c.accept_ack(out.ack).success);
}

TEST(Suites, MismatchIsRejected) {
  rig::Rig r(Suite::Md5Compat);
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const FurtherMessage msg = c.build_strategy_message(kMoveVm7);
  EXPECT_TRUE(r.provider->process_strategy(msg, Suite::Modern).rejection.has_value());
}

TEST(Ack, TamperIsRejected) {
  rig::Rig r;
  EnterpriseClient c = r.client(rig::kEp1Code, 0);
  r.register_client(c);
  const AckMessage ack = r.send(c, kMoveVm7).ack;
  AckMessage forged = ack;
  forged.status = kFailure;
  EXPECT_EQ(code_of([&] { c.accept_ack(forged); }), ErrorCode::DigestMismatch);
  EXPECT_EQ(code_of([&] { c.accept_ack(tampered(ack, &AckMessage::in_reply_to, 0)); }), ErrorCode::DigestMismatch);
  EXPECT_EQ(code_of([&] { c.accept_ack(tampered(ack, &AckMessage::signature_block, 40)); }),
            ErrorCode::SignatureInvalid);
  EXPECT_TRUE(c.accept_ack(ack).success);
}

TEST(Fuzz, EveryByteFlipIsRejected) {
  for (Suite suite : {Suite::Md5Compat, Suite::Modern}) {
    for (const auto& [name, result] : {std::pair{"registration", rig::fuzz_registration(suite)},
                                       std::pair{"reply", rig::fuzz_reply(suite)},
                                       std::pair{"further", rig::fuzz_further(suite)}}) {
      EXPECT_TRUE(result.ok()) << name << " suite " << crypto::to_string(suite) << ": " << result.rejected << "/"
                               << result.attempts << " rejected, original accepted " << result.original_accepted
                               << ", state unchanged " << result.state_unchanged;
    }
  }
}

TEST(Enrollment, ParsesAndValidates) {
  const auto t = EnrollmentTable::from_json(R"({"enrollments":[{"ep_code":"EP1-SECRET","tenant":"EP1"}]})");
  EXPECT_EQ(t.tenant_by_code.at("EP1-SECRET"), "EP1");
  EXPECT_EQ(code_of([] { EnrollmentTable::from_json(R"({"enrollments":[{"ep_code":"short","tenant":"EP1"}]})"); }),
            ErrorCode::InvalidScenario);
  EXPECT_EQ(code_of([] { EnrollmentTable::from_json("[]"); }), ErrorCode::InvalidScenario);
  EXPECT_EQ(code_of([] {
              EnrollmentTable::from_json(
                  R"({"enrollments":[{"ep_code":"EP1-SECRET","tenant":"EP1"},{"ep_code":"EP1-SECRET","tenant":"X"}]})");
            }),
            ErrorCode::DuplicateId);
  EXPECT_NO_THROW(EnrollmentTable::load(fx::scenario_path("enrollment.json")));
}
