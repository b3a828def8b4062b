// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <thread>

#include <gtest/gtest.h>

#include "conerf/image_io.hpp"
#include "fixtures.hpp"
#include "service.hpp"

#include <httplib.h>
#include <json.hpp>

namespace conerf {
namespace {

using json = nlohmann::json;
using service::RenderService;

Checkpoint small_checkpoint() {
    const SyntheticDataset data = generate_synthetic(testing::tiny_spec(FieldMode::k2D, 10, 6, 2));
    TrainConfig config;
    config.batch_rays = 16;
    config.total_steps = 2;
    Trainer trainer(data.train, testing::tiny_model(data.train), config);
    trainer.step();
    return trainer.checkpoint();
}

class ServiceTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() { service_ = new RenderService(small_checkpoint()); }
    static void TearDownTestSuite() {
        delete service_;
        service_ = nullptr;
    }
    static RenderService* service_;
};

RenderService* ServiceTest::service_ = nullptr;

Image decode(const std::string& bytes) {
    testing::TempDir dir("png");
    testing::write_text(dir.path() / "r.png", bytes);
    return read_png(dir.path() / "r.png", 3);
}

TEST_F(ServiceTest, Health) {
    const service::Reply r = service_->health();
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body, "ok");
}

TEST_F(ServiceTest, MetaListsAttributesAndFrames) {
    const service::Reply r = service_->meta();
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.content_type, "application/json");
    const json meta = json::parse(r.body);
    EXPECT_EQ(meta["mode"], "2d");
    EXPECT_EQ(meta["width"], 10);
    EXPECT_EQ(meta["step"], 1);
    ASSERT_EQ(meta["attributes"].size(), 3u);
    for (const json& a : meta["attributes"]) {
        EXPECT_EQ(a["min"], -1.0);
        EXPECT_EQ(a["max"], 1.0);
    }
    ASSERT_EQ(meta["frames"].size(), 6u);
    EXPECT_EQ(meta["frames"][0]["attributes"].size(), 3u);
}

TEST_F(ServiceTest, RenderReturnsPng) {
    const service::Reply r = service_->render(R"({"frame": 1, "width": 7, "height": 5})");
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.content_type, "image/png");
    const Image image = decode(r.body);
    EXPECT_EQ(image.width, 7);
    EXPECT_EQ(image.height, 5);
}

TEST_F(ServiceTest, EmptyBodyRendersFrameZero) {
    const service::Reply a = service_->render("");
    const service::Reply b = service_->render(R"({"frame": 0})");
    ASSERT_EQ(a.status, 200);
    EXPECT_EQ(a.body, b.body);
}

TEST_F(ServiceTest, IdenticalRequestsGiveIdenticalBytes) {
    const std::string body = R"({"frame": 2, "attributes": {"left": 0.5}})";
    const service::Reply a = service_->render(body);
    const service::Reply b = service_->render(body);
    ASSERT_EQ(a.status, 200) << a.body;
    EXPECT_EQ(a.body, b.body);
}

TEST_F(ServiceTest, BadRequests) {
    EXPECT_EQ(service_->render("{not json").status, 400);
    EXPECT_EQ(service_->render("[1, 2]").status, 400);
    EXPECT_EQ(service_->render(R"({"frame": "x"})").status, 400);
    EXPECT_EQ(service_->render(R"({"attributes": {"nope": 0.1}})").status, 400);
    EXPECT_EQ(service_->render(R"({"attributes": {"left": 1.5}})").status, 400);
    EXPECT_EQ(service_->render(R"({"attributes": {"left": "a"}})").status, 400);
    EXPECT_EQ(service_->render(R"({"attributes": [1]})").status, 400);
    EXPECT_EQ(service_->render(R"({"width": 0})").status, 400);
    EXPECT_EQ(service_->render(R"({"width": 5000})").status, 400);
}

TEST_F(ServiceTest, UnknownFrameIs404) {
    EXPECT_EQ(service_->render(R"({"frame": 6})").status, 404);
    EXPECT_EQ(service_->render(R"({"frame": -1})").status, 404);
}

TEST_F(ServiceTest, HttpRoundTrip) {
    service::HttpServer server(*service_);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread worker([&server] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);

    auto health = client.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    auto meta = client.Get("/meta");
    ASSERT_TRUE(meta);
    EXPECT_EQ(meta->body, service_->meta().body);
    auto render = client.Post("/render", R"({"frame": 1})", "application/json");
    ASSERT_TRUE(render);
    EXPECT_EQ(render->status, 200);
    EXPECT_EQ(render->body, service_->render(R"({"frame": 1})").body);
    auto missing = client.Post("/render", R"({"frame": 99})", "application/json");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    server.stop();
    worker.join();
}

}  // namespace
}  // namespace conerf
