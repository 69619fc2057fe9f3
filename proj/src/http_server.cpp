#include "eas/http_server.hpp"

#include "eas/error.hpp"

#include <httplib.h>

namespace eas::api {

namespace {

std::string bearer(const httplib::Request& req) {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() > prefix.size() && header.compare(0, prefix.size(), prefix) == 0)
        return header.substr(prefix.size());
    return {};
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
    return j;
}

ResultFilter filter_from(const httplib::Request& req) {
    ResultFilter f;
    auto get = [&](const char* key) {
        return req.has_param(key) ? req.get_param_value(key) : std::string{};
    };
    f.exam_id = get("exam");
    if (f.exam_id.empty()) f.exam_id = get("exam_id");
    f.year_level = get("year_level");
    f.section = get("section");
    f.subject = get("subject");
    return f;
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler wrap(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, f(req));
        } catch (const DeadlineExceededError& e) {
            send_json(res, http_status(e.code()),
                      Json{{"error", to_string(e.code())}, {"message", e.what()}, {"result", e.result()}});
        } catch (const Error& e) {
            send_json(res, http_status(e.code()),
                      Json{{"error", to_string(e.code())}, {"message", e.what()}});
        } catch (const Json::exception& e) {
            send_json(res, 400, Json{{"error", "BadRequest"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            send_json(res, 500, Json{{"error", "Internal"}, {"message", e.what()}});
        }
    };
}

}  // namespace

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    auto& svc = service_;

    s.Post("/api/login", wrap([&svc](const auto& req) { return svc.login(parse_body(req)); }));
    s.Post("/api/users", wrap([&svc](const auto& req) {
               return svc.create_user(bearer(req), parse_body(req));
           }));
    s.Put(R"(/api/users/([^/]+))", wrap([&svc](const auto& req) {
              return svc.update_user(bearer(req), req.matches[1].str(), parse_body(req));
          }));
    s.Delete(R"(/api/users/([^/]+))", wrap([&svc](const auto& req) {
                 return svc.delete_user(bearer(req), req.matches[1].str());
             }));
    s.Post(R"(/api/users/([^/]+)/reset-password)", wrap([&svc](const auto& req) {
               return svc.reset_password(bearer(req), req.matches[1].str());
           }));
    s.Post("/api/questions", wrap([&svc](const auto& req) {
               return svc.create_question(bearer(req), parse_body(req));
           }));
    s.Post("/api/banks/import",
           wrap([&svc](const auto& req) { return svc.import_bank(bearer(req), req.body); }));
    s.Post("/api/exams", wrap([&svc](const auto& req) {
               return svc.create_exam(bearer(req), parse_body(req));
           }));
    s.Post(R"(/api/exams/([^/]+)/credentials)", wrap([&svc](const auto& req) {
               return svc.issue_credentials(bearer(req), req.matches[1].str(), parse_body(req));
           }));
    s.Post("/api/exam-login", wrap([&svc](const auto& req) { return svc.exam_login(parse_body(req)); }));
    s.Get("/api/session/questions",
          wrap([&svc](const auto& req) { return svc.get_questions(bearer(req)); }));
    s.Post("/api/session/answers", wrap([&svc](const auto& req) {
               return svc.post_answer(bearer(req), parse_body(req));
           }));
    s.Post("/api/session/finalize",
           wrap([&svc](const auto& req) { return svc.finalize(bearer(req)); }));
    s.Get("/api/results/me", wrap([&svc](const auto& req) { return svc.my_result(bearer(req)); }));
    s.Get("/api/results", wrap([&svc](const auto& req) {
              return svc.list_results(bearer(req), filter_from(req));
          }));
    s.Get(R"(/api/item-analysis/([^/]+))", wrap([&svc](const auto& req) {
              return svc.item_analysis(bearer(req), req.matches[1].str(), filter_from(req));
          }));
    s.Get(R"(/api/charts/([^/]+))", wrap([&svc](const auto& req) {
              return svc.charts(bearer(req), req.matches[1].str(), filter_from(req));
          }));
    s.Put("/api/profile", wrap([&svc](const auto& req) {
              return svc.update_profile(bearer(req), parse_body(req));
          }));

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404)
            send_json(res, 404, Json{{"error", "NotFound"}, {"message", "no such endpoint"}});
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::set_access_log(std::function<void(const std::string&)> sink) {
    server_->set_logger([sink = std::move(sink)](const httplib::Request& req, const httplib::Response& res) {
        sink(req.method + " " + req.path + " " + std::to_string(res.status));
    });
}

}  // namespace eas::api
