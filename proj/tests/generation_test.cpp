// Copyright 2026 The feakit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <thread>

#include "fea/common/error.hpp"
#include "fea/data/pipeline.hpp"
#include "httplib.h"

using namespace fea;
using namespace fea::data;

namespace {

const std::filesystem::path kData = std::filesystem::path(FEA_TEST_DATA_DIR) / "feaset";

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fea_generation_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

class CountingGenerator : public TextGenerator {
public:
    explicit CountingGenerator(int failures_before_success = 0) : failures_(failures_before_success) {}
    std::string generate(const GenerationRequest& request) override {
        ++calls;
        if (failures_ > 0) {
            --failures_;
            fail(ErrorKind::ExternalService, "transient");
        }
        return "response for " + request.image_id;
    }
    std::atomic<int> calls{0};

private:
    int failures_;
};

std::vector<AnnotationRecord> subset(const std::vector<AnnotationRecord>& all, std::initializer_list<const char*> ids) {
    std::vector<AnnotationRecord> out;
    for (const char* id : ids)
        for (const auto& r : all)
            if (r.image_id == id) out.push_back(r);
    return out;
}

}  // namespace

TEST(FixtureGenerator, ReplaysStoredResponse) {
    FixtureGenerator gen(kData / "responses");
    EXPECT_NE(gen.generate({"img01", "", ""}).find("[SUMMARY]"), std::string::npos);
    try {
        gen.generate({"missing", "", ""});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ExternalService);
    }
    EXPECT_THROW(gen.generate({"../annotations", "", ""}), Error);
    EXPECT_THROW(FixtureGenerator(kData / "nope"), Error);
}

TEST(CachedGenerator, MemoisesPerImage) {
    CountingGenerator inner;
    CachedGenerator cached(inner);
    EXPECT_EQ(cached.generate({"a", "", ""}), "response for a");
    EXPECT_EQ(cached.generate({"a", "", ""}), "response for a");
    EXPECT_EQ(cached.generate({"b", "", ""}), "response for b");
    EXPECT_EQ(inner.calls.load(), 2);
    EXPECT_EQ(cached.inner_calls(), 2u);
}

TEST(CachedGenerator, DiskCacheSurvivesRestart) {
    const auto dir = fresh_dir("disk");
    {
        CountingGenerator inner;
        CachedGenerator cached(inner, dir);
        cached.generate({"a", "sys", "prompt"});
        EXPECT_TRUE(std::filesystem::exists(dir / "a.json"));
    }
    CountingGenerator inner;
    CachedGenerator cached(inner, dir);
    EXPECT_EQ(cached.generate({"a", "sys", "prompt"}), "response for a");
    EXPECT_EQ(inner.calls.load(), 0);
}

TEST(CachedGenerator, RetriesWithExponentialBackoff) {
    CountingGenerator inner(2);
    std::vector<long> sleeps;
    CachedGenerator cached(inner, {}, RetryPolicy{4, std::chrono::milliseconds(100), 2.0},
                           [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    EXPECT_EQ(cached.generate({"a", "", ""}), "response for a");
    EXPECT_EQ(inner.calls.load(), 3);
    EXPECT_EQ(sleeps, (std::vector<long>{100, 200}));
}

TEST(CachedGenerator, GivesUpAfterMaxAttempts) {
    CountingGenerator inner(10);
    CachedGenerator cached(inner, {}, RetryPolicy{3, std::chrono::milliseconds(1), 2.0},
                           [](std::chrono::milliseconds) {});
    try {
        cached.generate({"a", "", ""});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ExternalService);
        EXPECT_NE(std::string(e.what()).find("3 attempt"), std::string::npos);
    }
    EXPECT_EQ(inner.calls.load(), 3);
}

TEST(CachedGenerator, ConcurrentRequestsForOneImageCallOnce) {
    CountingGenerator inner;
    CachedGenerator cached(inner);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&] {
            for (int i = 0; i < 20; ++i) cached.generate({"img" + std::to_string(i % 4), "", ""});
        });
    threads.clear();
    EXPECT_EQ(inner.calls.load(), 4);
}

TEST(HttpChatGenerator, TalksToChatEndpoint) {
    httplib::Server server;
    nlohmann::json seen;
    std::string auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        auth = req.get_header_value("Authorization");
        const nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "[SUMMARY] ok"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::jthread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpGeneratorConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.api_key = "secret";
    HttpChatGenerator gen(cfg);
    EXPECT_EQ(gen.generate({"img", "system text", "user text"}), "[SUMMARY] ok");
    EXPECT_EQ(auth, "Bearer secret");
    EXPECT_EQ(seen["messages"][0]["content"], "system text");
    EXPECT_EQ(seen["messages"][1]["role"], "user");
    EXPECT_EQ(seen["messages"][1]["content"], "user text");

    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
    HttpChatGenerator broken(cfg);
    try {
        broken.generate({"img", "", ""});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ExternalService);
    }
    server.stop();
}

TEST(BuildDataset, FixtureCorpusQuarantinesPlantedErrors) {
    const auto annotations = read_annotations(kData / "annotations.jsonl");
    ASSERT_EQ(annotations.size(), 12u);
    FixtureGenerator fixtures(kData / "responses");
    const auto result = build_dataset(annotations, fixtures, default_template_bank(), 5);
    EXPECT_TRUE(result.conserved(annotations.size()));
    EXPECT_EQ(result.validated.size(), 10u);
    EXPECT_EQ(result.instructions.size(), 30u);
    ASSERT_EQ(result.quarantined.size(), 2u);
    EXPECT_EQ(result.quarantined[0].image_id, "img07");
    EXPECT_EQ(result.quarantined[1].image_id, "img11");
    EXPECT_TRUE(result.failures.empty());
}

TEST(BuildDataset, FourImagesGiveTwelveRecords) {
    const auto all = read_annotations(kData / "annotations.jsonl");
    FixtureGenerator fixtures(kData / "responses");
    EXPECT_EQ(build_dataset(subset(all, {"img01", "img02", "img03", "img04"}), fixtures, default_template_bank(), 1)
                  .instructions.size(),
              12u);
    const auto with_bad = build_dataset(subset(all, {"img01", "img02", "img03", "img07"}), fixtures,
                                        default_template_bank(), 1);
    EXPECT_EQ(with_bad.instructions.size(), 9u);
    EXPECT_EQ(with_bad.quarantined.size(), 1u);
}

TEST(BuildDataset, ParallelMatchesSerial) {
    const auto annotations = read_annotations(kData / "annotations.jsonl");
    FixtureGenerator fixtures(kData / "responses");
    const auto serial = build_dataset(annotations, fixtures, default_template_bank(), 9, 1);
    const auto parallel = build_dataset(annotations, fixtures, default_template_bank(), 9, 4);
    EXPECT_EQ(serial.instructions, parallel.instructions);
    EXPECT_EQ(serial.validated, parallel.validated);
}

TEST(BuildDataset, RerunWithCacheMakesNoCalls) {
    const auto dir = fresh_dir("rerun");
    const auto annotations = read_annotations(kData / "annotations.jsonl");
    FixtureGenerator fixtures(kData / "responses");
    {
        CachedGenerator cached(fixtures, dir);
        build_dataset(annotations, cached, default_template_bank(), 3);
        EXPECT_EQ(cached.inner_calls(), 12u);
    }
    CachedGenerator cached(fixtures, dir);
    build_dataset(annotations, cached, default_template_bank(), 3);
    EXPECT_EQ(cached.inner_calls(), 0u);
}

TEST(BuildDataset, ClientFailuresAreReportedNotDropped) {
    auto annotations = read_annotations(kData / "annotations.jsonl");
    annotations.push_back({"img99", "s03", Expression::Fear, AuSet{1}});
    FixtureGenerator fixtures(kData / "responses");
    CachedGenerator cached(fixtures, {}, RetryPolicy{2, std::chrono::milliseconds(1), 2.0},
                           [](std::chrono::milliseconds) {});
    const auto result = build_dataset(annotations, cached, default_template_bank(), 3);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].image_id, "img99");
    EXPECT_TRUE(result.conserved(annotations.size()));
    EXPECT_EQ(result.instructions.size(), 30u);
}
