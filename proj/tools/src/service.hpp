// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "conerf/checkpoint.hpp"
#include "conerf/model.hpp"
#include "conerf/rendering.hpp"

namespace conerf::service {

struct Reply {
    int status = 200;
    std::string content_type = "text/plain";
    std::string body;
};

/// Request handlers over a frozen model. Handlers are const and safe to call
/// concurrently.
class RenderService {
public:
    explicit RenderService(Checkpoint checkpoint);

    Reply health() const;
    Reply meta() const;
    /// Body: {"frame": id, "camera": {...}, "attributes": {name: value},
    /// "width": w, "height": h}. Every field is optional except the camera
    /// of 3D models. Replies with PNG bytes.
    Reply render(const std::string& body) const;

    const ConerfModel& model() const { return model_; }
    const Checkpoint& checkpoint() const { return checkpoint_; }

private:
    Checkpoint checkpoint_;
    ConerfModel model_;
    RenderSettings settings_;
};

/// HTTP front end: GET /health, GET /meta, POST /render.
class HttpServer {
public:
    explicit HttpServer(const RenderService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds `port` (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace conerf::service
