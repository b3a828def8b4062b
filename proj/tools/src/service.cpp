// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <utility>

#include "conerf/error.hpp"
#include "conerf/image_io.hpp"
#include "conerf/metrics.hpp"
#include "conerf/training.hpp"

namespace conerf::service {

using nlohmann::json;

namespace {

Reply error_reply(int status, const std::string& message) {
    return Reply{status, "application/json", json{{"error", message}}.dump()};
}

}  // namespace

RenderService::RenderService(Checkpoint checkpoint)
    : checkpoint_(std::move(checkpoint)),
      model_(model_from_checkpoint(checkpoint_)),
      settings_(inference_settings(checkpoint_)) {}

Reply RenderService::health() const { return Reply{200, "text/plain", "ok"}; }

Reply RenderService::meta() const {
    const ModelConfig& cfg = model_.config();
    json attributes = json::array();
    for (const std::string& name : checkpoint_.attributes) {
        attributes.push_back({{"name", name}, {"min", -1.0}, {"max", 1.0}});
    }
    json frames = json::array();
    for (int c = 0; c < cfg.num_frames; ++c) {
        const FrameCodes codes = frame_codes(model_, c);
        frames.push_back({{"id", c}, {"latent", codes.latent}, {"attributes", regress_attributes(model_, codes.latent)}});
    }
    const json body{{"mode", to_string(cfg.mode)}, {"width", checkpoint_.image_width},
                    {"height", checkpoint_.image_height}, {"step", checkpoint_.step},
                    {"attributes", attributes},       {"frames", frames}};
    return Reply{200, "application/json", body.dump()};
}

Reply RenderService::render(const std::string& body) const {
    const ModelConfig& cfg = model_.config();
    json request;
    try {
        request = body.empty() ? json::object() : json::parse(body);
    } catch (const json::exception& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (!request.is_object()) return error_reply(400, "request body must be a JSON object");
    try {
        int frame = 0;
        if (request.contains("frame")) {
            if (!request["frame"].is_number_integer()) return error_reply(400, "frame must be an integer");
            frame = request["frame"].get<int>();
            if (frame < 0 || frame >= cfg.num_frames) {
                return error_reply(404, "unknown frame id " + std::to_string(frame));
            }
        }
        FrameCodes codes = frame_codes(model_, frame);
        if (request.contains("attributes")) {
            const json& attrs = request["attributes"];
            if (!attrs.is_object()) return error_reply(400, "attributes must map names to values");
            std::vector<double> values = regress_attributes(model_, codes.latent);
            for (const auto& [name, value] : attrs.items()) {
                const auto it = std::find(checkpoint_.attributes.begin(), checkpoint_.attributes.end(), name);
                if (it == checkpoint_.attributes.end()) return error_reply(400, "unknown attribute '" + name + "'");
                if (!value.is_number()) return error_reply(400, "attribute '" + name + "' must be a number");
                const double v = value.get<double>();
                if (!(v >= -1.0 && v <= 1.0)) {
                    return error_reply(400, "attribute '" + name + "' out of range [-1, 1]");
                }
                values[static_cast<std::size_t>(it - checkpoint_.attributes.begin())] = v;
            }
            codes.attributes = std::move(values);
        }
        const int width = request.value("width", checkpoint_.image_width);
        const int height = request.value("height", checkpoint_.image_height);
        if (width <= 0 || height <= 0 || width > 4096 || height > 4096) {
            return error_reply(400, "width and height must lie in [1, 4096]");
        }
        RenderedImage rendered;
        if (cfg.mode == FieldMode::k2D) {
            rendered = render_image_2d(model_, width, height, codes, settings_);
        } else {
            if (!request.contains("camera")) return error_reply(400, "3D renders need a camera");
            json camera = request["camera"];
            if (!camera.is_object()) return error_reply(400, "camera must be an object");
            if (!camera.contains("width")) camera["width"] = width;
            if (!camera.contains("height")) camera["height"] = height;
            rendered = render_image(model_, camera_from_json(camera.dump()), codes, settings_);
        }
        const std::vector<std::uint8_t> png = encode_png(to_image(rendered));
        return Reply{200, "image/png", std::string(png.begin(), png.end())};
    } catch (const json::exception& e) {
        return error_reply(400, std::string("malformed request: ") + e.what());
    } catch (const DataError& e) {
        return error_reply(400, e.what());
    } catch (const ContractViolation& e) {
        return error_reply(400, e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const RenderService& service) : impl_(std::make_unique<Impl>()) {
    auto send = [](httplib::Response& res, const Reply& reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    impl_->server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.health());
    });
    impl_->server.Get("/meta", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.meta());
    });
    impl_->server.Post("/render", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.render(req.body));
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace conerf::service
