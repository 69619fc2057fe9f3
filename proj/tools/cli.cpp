#include "cli.hpp"

#include "eas/csv.hpp"
#include "eas/error.hpp"
#include "eas/http_server.hpp"
#include "eas/service.hpp"
#include "eas/stats_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <condition_variable>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace eas::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kRosterHeader = "examinee_id,name,year_level,section";
constexpr std::string_view kCredentialsHeader = "examinee_id,name,exam_number,password";

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
        throw IoFailure("cannot write " + path.string());
}

struct Globals {
    std::string data_dir = "./eas-data";
    std::string kdf = "interactive";
    std::string log_level = "info";
};

api::ServiceOptions service_options(const Globals& g) {
    api::ServiceOptions opts;
    opts.data_dir = g.data_dir;
    opts.kdf = g.kdf == "minimal" ? crypto::KdfParams::minimal() : crypto::KdfParams::interactive();
    return opts;
}

std::vector<Examinee> read_roster(const fs::path& path) {
    std::istringstream in(read_file(path));
    csv::Reader reader(in);
    auto header = reader.next();
    std::string joined;
    if (header)
        for (std::size_t i = 0; i < header->fields.size(); ++i)
            joined += (i ? "," : "") + header->fields[i];
    if (joined != kRosterHeader)
        throw Error(ErrorCode::MalformedHeader,
                    "roster header must be '" + std::string(kRosterHeader) + "'");
    std::vector<Examinee> roster;
    while (auto rec = reader.next()) {
        if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
        if (rec->fields.size() != 4)
            throw Error(ErrorCode::BadRequest, "roster line " + std::to_string(rec->line) +
                                                   ": expected 4 fields");
        roster.push_back({rec->fields[0], rec->fields[1], rec->fields[2], rec->fields[3]});
    }
    return roster;
}

void emit(std::ostream& out, const std::string& out_path, std::string_view text) {
    if (out_path.empty()) out << text;
    else write_file(out_path, text);
}

// Blocks SIGINT/SIGTERM in every thread and stops the server when one
// arrives, so no work happens inside a signal handler.
int serve(const Globals& g, const std::string& listen, const std::string& admin_user,
          std::ostream& out, std::ostream& err) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BadRequest, "--listen must be host:port");
    const std::string host = listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, "--listen must be host:port");
    }

    fs::create_directories(g.data_dir);
    api::Service service(service_options(g));
    for (const auto& w : service.log().warnings()) err << "warning: " << w << '\n';
    if (!admin_user.empty()) {
        const char* pw = std::getenv("EAS_ADMIN_PASSWORD");
        if (!pw || !*pw) throw Error(ErrorCode::BadRequest, "EAS_ADMIN_PASSWORD is not set");
        if (service.bootstrap_admin(admin_user, pw)) out << "created administrator " << admin_user << '\n';
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    api::HttpServer server(service);
    if (g.log_level == "debug")
        server.set_access_log([&err](const std::string& line) { err << line << '\n'; });
    const int bound = server.bind(host, port);
    if (bound < 0) throw IoFailure("cannot listen on " + listen);
    if (g.log_level != "quiet") out << "listening on " << host << ':' << bound << std::endl;

    std::mutex m;
    std::condition_variable cv;
    bool stopping = false;
    std::thread sweeper([&] {
        std::unique_lock lock(m);
        while (!cv.wait_for(lock, std::chrono::seconds(1), [&] { return stopping; })) {
            lock.unlock();
            try {
                service.sweep_expired();
            } catch (const std::exception& e) {
                err << "sweep failed: " << e.what() << '\n';
            }
            lock.lock();
        }
    });
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });

    server.listen_after_bind();
    {
        std::lock_guard lock(m);
        stopping = true;
    }
    cv.notify_all();
    sweeper.join();
    // The waiter is still parked in sigwait when stop came from elsewhere.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    service.snapshot();
    if (g.log_level != "quiet") out << "stopped" << std::endl;
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exam administration and item-analysis suite", "eas"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--data-dir", g.data_dir, "Directory holding the event log and snapshot")
        ->capture_default_str();
    app.add_option("--kdf", g.kdf, "Password hashing cost (minimal is for tests only)")
        ->check(CLI::IsMember({"interactive", "minimal"}))
        ->capture_default_str();
    app.add_option("--log-level", g.log_level, "quiet, info or debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}))
        ->capture_default_str();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::string listen = "127.0.0.1:8080";
    std::string admin_user;
    serve_cmd->add_option("--listen", listen, "host:port")->capture_default_str();
    serve_cmd->add_option("--bootstrap-admin", admin_user,
                          "Create this administrator on an empty deployment (password from "
                          "EAS_ADMIN_PASSWORD)");

    auto* bank_cmd = app.add_subcommand("bank", "Question banks");
    bank_cmd->require_subcommand(1);
    auto* bank_import = bank_cmd->add_subcommand("import", "Import a question-bank CSV");
    std::string bank_csv;
    bank_import->add_option("csv", bank_csv, "CSV file")->required();

    auto* exam_cmd = app.add_subcommand("exam", "Exams");
    exam_cmd->require_subcommand(1);
    auto* exam_create = exam_cmd->add_subcommand("create", "Define an exam");
    std::string exam_subject, exam_id;
    int exam_questions = 0, exam_minutes = 0;
    double exam_passing = 0.0;
    exam_create->add_option("--subject", exam_subject)->required();
    exam_create->add_option("--questions", exam_questions, "Items drawn per examinee")->required();
    exam_create->add_option("--minutes", exam_minutes, "Time limit")->required();
    exam_create->add_option("--passing-rate", exam_passing, "Passing percent")->required();
    exam_create->add_option("--id", exam_id, "Exam id (generated when omitted)");

    auto* cred_cmd = app.add_subcommand("credentials", "Exam credentials");
    cred_cmd->require_subcommand(1);
    auto* cred_issue = cred_cmd->add_subcommand("issue", "Issue credentials for a roster");
    std::string cred_exam, cred_roster, cred_out;
    cred_issue->add_option("--exam", cred_exam)->required();
    cred_issue->add_option("--roster", cred_roster, "CSV: " + std::string(kRosterHeader))->required();
    cred_issue->add_option("--out", cred_out, "Write the credential sheet here instead of stdout");

    auto* analyze_cmd = app.add_subcommand("analyze", "Item analysis of an exam");
    std::string an_exam, an_out_dir = ".", an_year, an_section;
    analyze_cmd->add_option("--exam", an_exam)->required();
    analyze_cmd->add_option("--out-dir", an_out_dir, "Where the report and matrix files go")
        ->capture_default_str();
    analyze_cmd->add_option("--year-level", an_year);
    analyze_cmd->add_option("--section", an_section);

    auto* stats_cmd = app.add_subcommand("stats", "Evaluation statistics on CSV input");
    stats_cmd->require_subcommand(1);
    std::string stats_in, stats_out;
    std::string stats_kind;
    for (const char* name : {"describe", "anova", "tukey"}) {
        auto* sub = stats_cmd->add_subcommand(name, std::string(name) + " table");
        sub->add_option("--in", stats_in, "Summary or ratings CSV")->required();
        sub->add_option("--out", stats_out, "Write here instead of stdout");
        sub->callback([&stats_kind, name] { stats_kind = name; });
    }

    auto* report_cmd = app.add_subcommand("report", "Reports");
    report_cmd->require_subcommand(1);
    auto* charts_cmd = report_cmd->add_subcommand("charts", "Chart-data JSON");
    std::string ch_exam, ch_dimension, ch_out;
    charts_cmd->add_option("--exam", ch_exam);
    charts_cmd->add_option("--dimension", ch_dimension)
        ->required()
        ->check(CLI::IsMember({"item", "year_level", "section", "subject"}));
    charts_cmd->add_option("--out", ch_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    try {
        if (serve_cmd->parsed()) return serve(g, listen, admin_user, out, err);

        if (stats_cmd->parsed()) {
            std::istringstream in(read_file(stats_in));
            const auto data = stats::read_stats_csv(in);
            const std::string text = stats_kind == "describe" ? stats::descriptives_csv(data)
                                     : stats_kind == "anova"  ? stats::anova_csv(data)
                                                              : stats::tukey_csv(data);
            emit(out, stats_out, text);
            return kOk;
        }

        fs::create_directories(g.data_dir);
        api::Service service(service_options(g));
        for (const auto& w : service.log().warnings()) err << "warning: " << w << '\n';
        const auto token = service.operator_token();

        if (bank_import->parsed()) {
            const auto report = service.import_bank(token, read_file(bank_csv));
            out << "imported " << report.at("imported").get<std::size_t>() << " question(s) into "
                << report.at("subject").get<std::string>() << " (bank version "
                << report.at("bank_version").get<std::uint64_t>() << ", "
                << report.at("bank_size").get<std::size_t>() << " total)\n";
            for (const auto& issue : report.at("issues"))
                out << "line " << issue.at("line").get<std::size_t>() << ": "
                    << issue.at("reason").get<std::string>() << '\n';
            return kOk;
        }
        if (exam_create->parsed()) {
            Json body{{"subject", exam_subject},
                      {"question_count", exam_questions},
                      {"time_limit_minutes", exam_minutes},
                      {"passing_rate_percent", exam_passing}};
            if (!exam_id.empty()) body["exam_id"] = exam_id;
            out << service.create_exam(token, body).dump(2) << '\n';
            return kOk;
        }
        if (cred_issue->parsed()) {
            Json examinees = Json::array();
            for (const auto& e : read_roster(cred_roster)) examinees.push_back(e);
            const auto issued = service.issue_credentials(token, cred_exam, Json{{"examinees", examinees}});
            std::string sheet = std::string(kCredentialsHeader) + "\n";
            for (const auto& c : issued.at("credentials"))
                sheet += csv::format_row({c.at("examinee_id").get<std::string>(), c.at("name").get<std::string>(),
                                          c.at("exam_number").get<std::string>(),
                                          c.at("password").get<std::string>()});
            emit(out, cred_out, sheet);
            return kOk;
        }
        if (analyze_cmd->parsed()) {
            api::ResultFilter filter;
            filter.year_level = an_year;
            filter.section = an_section;
            const auto matrix = service.response_matrix(token, an_exam, filter);
            Json report = psychometrics::analyze(matrix);
            report["n_examinees"] = matrix.rows();
            const std::string json_text = report.dump(2) + "\n";
            write_file(fs::path(an_out_dir) / (an_exam + ".item-analysis.json"), json_text);
            write_file(fs::path(an_out_dir) / (an_exam + ".matrix.csv"), psychometrics::export_matrix_csv(matrix));
            out << json_text;
            return kOk;
        }
        if (charts_cmd->parsed()) {
            api::ResultFilter filter;
            filter.exam_id = ch_exam;
            emit(out, ch_out, service.charts(token, ch_dimension, filter).dump(2) + "\n");
            return kOk;
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        switch (e.code()) {
            case ErrorCode::IoError:
            case ErrorCode::CorruptEvent:
            case ErrorCode::StorageFull:
                return kIo;
            default:
                return kValidation;
        }
    } catch (const IoFailure& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace eas::cli
