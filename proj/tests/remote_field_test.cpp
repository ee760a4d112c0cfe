// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "flowdc/pipeline.hpp"
#include "flowdc/remote_field.hpp"
#include "test_support.hpp"

namespace flowdc {
namespace {

using testing::MockVelocityServer;
using testing::vec;

MockVelocityServer::Handler negate() {
  return [](const VelocityQuery& q) { return -q.latent; };
}

RemoteFieldConfig config_for(const MockVelocityServer& server) {
  RemoteFieldConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.timeout_ms = 2000;
  return cfg;
}

ErrorKind caught_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

TEST(Base64, KnownVectorsAndRoundTrip) {
  EXPECT_EQ(wire::base64_encode("Man"), "TWFu");
  EXPECT_EQ(wire::base64_encode("Ma"), "TWE=");
  EXPECT_EQ(wire::base64_encode("M"), "TQ==");
  EXPECT_EQ(wire::base64_decode("TWE=", ErrorKind::BadRequest), "Ma");
  EXPECT_THROW(wire::base64_decode("TW=E", ErrorKind::BadRequest), Error);
  EXPECT_THROW(wire::base64_decode("TWE", ErrorKind::BadRequest), Error);
}

TEST(WireFloats, Base64IsBitExact) {
  const std::vector<double> values{0.1, -0.0, 1e-310, std::numeric_limits<double>::max(), -3.25, 1.0 / 3.0};
  const auto back = wire::decode_floats(wire::encode_floats(values, wire::FloatEncoding::Base64), ErrorKind::BadRequest);
  ASSERT_EQ(back.size(), values.size());
  EXPECT_EQ(std::memcmp(back.data(), values.data(), values.size() * sizeof(double)), 0);
  // Little-endian binary64 of 1.0.
  EXPECT_EQ(wire::encode_floats(std::vector<double>{1.0}, wire::FloatEncoding::Base64)["b64"], "AAAAAAAA8D8=");
}

TEST(WireQuery, RoundTripAndValidation) {
  const VelocityQuery q{LatentVector(std::vector<double>{1, 2, 3, 4, 5, 6}, Shape{2, 3}), 0.5, "cat; hat", 5.5};
  for (auto enc : {wire::FloatEncoding::Json, wire::FloatEncoding::Base64}) {
    const auto back = wire::decode_query(wire::encode_query(q, enc));
    EXPECT_EQ(back.latent, q.latent);
    EXPECT_EQ(back.t, 0.5);
    EXPECT_EQ(back.prompt, "cat; hat");
    EXPECT_EQ(back.guidance, 5.5);
  }
  auto j = wire::encode_query(q, wire::FloatEncoding::Json);
  j.erase("prompt");
  EXPECT_EQ(caught_kind([&] { wire::decode_query(j); }), ErrorKind::BadRequest);
  j = wire::encode_query(q, wire::FloatEncoding::Json);
  j["shape"] = {7};
  EXPECT_EQ(caught_kind([&] { wire::decode_query(j); }), ErrorKind::Unprocessable);
}

TEST(RemoteField, SingleQueryNegatedEcho) {
  MockVelocityServer server(negate());
  const RemoteField field(config_for(server));
  EXPECT_EQ(field.evaluate(vec({1, -2, 3}), 0.5, "p", 1.0), vec({-1, 2, -3}));
  EXPECT_EQ(remote_health(config_for(server))["status"], "ok");
}

TEST(RemoteField, JsonEncodingAlsoWorks) {
  MockVelocityServer server(negate());
  auto cfg = config_for(server);
  cfg.encoding = wire::FloatEncoding::Json;
  const RemoteField field(cfg);
  EXPECT_EQ(field.evaluate(vec({0.25, 4}), 0.5, "p", 1.0), vec({-0.25, -4}));
}

TEST(RemoteField, BatchPreservesOrderAcrossChunks) {
  MockVelocityServer server([](const VelocityQuery& q) {
    LatentVector v = q.latent;
    v[0] += q.t;
    return v;
  });
  auto cfg = config_for(server);
  cfg.batch_limit = 3;
  const RemoteField field(cfg);
  std::vector<VelocityQuery> queries;
  for (int i = 0; i < 8; ++i) queries.push_back({vec({double(i), 0}), 0.01 * i, "p", 1.0});
  const auto out = field.evaluate_batch(queries);
  ASSERT_EQ(out.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(out[i][0], i + 0.01 * i);
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteField, WrongLengthResponseIsShapeMismatch) {
  MockVelocityServer server(negate());
  server.truncate_by = 1;
  const RemoteField field(config_for(server));
  EXPECT_EQ(caught_kind([&] { field.evaluate(vec({1, 2, 3}), 0.5, "p", 1.0); }), ErrorKind::ShapeMismatch);
}

TEST(RemoteField, StatusCodesMapToKinds) {
  MockVelocityServer server([](const VelocityQuery& q) -> LatentVector {
    if (q.prompt == "bad") fail(ErrorKind::BadRequest, "bad");
    if (q.prompt == "unknown") fail(ErrorKind::UnknownPrompt, "who");
    fail(ErrorKind::ServerError, "boom");
  });
  auto cfg = config_for(server);
  const RemoteField field(cfg);
  EXPECT_EQ(caught_kind([&] { field.evaluate(vec({1}), 0.5, "bad", 1.0); }), ErrorKind::BadRequest);
  EXPECT_EQ(caught_kind([&] { field.evaluate(vec({1}), 0.5, "unknown", 1.0); }), ErrorKind::Unprocessable);
  EXPECT_EQ(caught_kind([&] { field.evaluate(vec({1}), 0.5, "other", 1.0); }), ErrorKind::ServerError);
  // HTTP errors are final: exactly one request each.
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteField, TimeoutIsRetried) {
  MockVelocityServer server(negate());
  server.delay_first_ms = 600;
  auto cfg = config_for(server);
  cfg.timeout_ms = 200;
  cfg.retries = 2;
  const RemoteField field(cfg);
  EXPECT_EQ(field.evaluate(vec({2}), 0.5, "p", 1.0), vec({-2}));
  EXPECT_EQ(server.requests(), 2);
}

TEST(RemoteField, TimeoutWithoutRetriesSurfaces) {
  MockVelocityServer server(negate());
  server.delay_first_ms = 600;
  auto cfg = config_for(server);
  cfg.timeout_ms = 200;
  cfg.retries = 0;
  const RemoteField field(cfg);
  EXPECT_EQ(caught_kind([&] { field.evaluate(vec({2}), 0.5, "p", 1.0); }), ErrorKind::Timeout);
}

TEST(RemoteField, UnreachableEndpointIsTransport) {
  RemoteFieldConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.timeout_ms = 300;
  cfg.retries = 1;
  const RemoteField field(cfg);
  const auto kind = caught_kind([&] { field.evaluate(vec({2}), 0.5, "p", 1.0); });
  EXPECT_TRUE(kind == ErrorKind::Transport || kind == ErrorKind::Timeout);
}

TEST(RemoteField, ConfigValidation) {
  RemoteFieldConfig cfg;
  cfg.batch_limit = 0;
  EXPECT_THROW(RemoteField{cfg}, Error);
}

TEST(RemoteField, PipelineOverTheWireMatchesLocalField) {
  GaussianScenario scn;
  scn.dim = 16;
  scn.add_prompt("s", std::vector<double>(16, 0.0));
  std::vector<double> a(16, 0.0), b(16, 0.0);
  a[0] = 1.5;
  b[5] = -1.0;
  scn.add_prompt("a", a, 0.7);
  scn.add_prompt("b", b);
  const GaussianField local(scn);
  MockVelocityServer server(testing::gaussian_handler(scn));
  const RemoteField remote(config_for(server));
  EditConfig cfg;
  cfg.seed = 4;
  const auto x_src = sample_prompt(scn, "s", 9);
  const auto want = run_flowdc(local, DelimiterDecoupler{}, x_src, "s", "a; b", cfg).endpoint;
  const auto got = run_flowdc(remote, DelimiterDecoupler{}, x_src, "s", "a; b", cfg).endpoint;
  EXPECT_EQ(got, want);
}

TEST(RemoteField, ServerSideUnknownPromptReachesPipelineWithContext) {
  GaussianScenario scn;
  scn.dim = 2;
  scn.add_prompt("s", {0, 0});
  MockVelocityServer server(testing::gaussian_handler(scn));
  const RemoteField remote(config_for(server));
  try {
    run_flowedit(remote, vec({0, 0}), "s", "nope", EditConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unprocessable);
    EXPECT_NE(std::string(e.what()).find("step k=27"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace flowdc
