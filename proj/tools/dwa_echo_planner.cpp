// Reference external planner: answers the line protocol with the built-in DWA.
//
//   dwa_echo_planner                 serve one peer on stdin/stdout
//   dwa_echo_planner --listen PORT   serve TCP peers one after another on
//                                    127.0.0.1:PORT (0 picks a free port); the
//                                    chosen port is printed as "PORT <n>"

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "navbench/bridge/dwa_echo.hpp"
#include "navbench/bridge/transport.hpp"

int main(int argc, char** argv) {
  CLI::App app{"DWA planner speaking the navbench bridge protocol"};
  std::optional<int> listen;
  app.add_option("--listen", listen, "Serve TCP on this port instead of stdin/stdout");
  CLI11_PARSE(app, argc, argv);

  using namespace navbench::bridge;
  try {
    if (!listen) {
      FdLineTransport io(0, 1, false);
      serve_dwa_echo(io);
      return 0;
    }
    TcpListener server(*listen);
    std::printf("PORT %d\n", server.port());
    std::fflush(stdout);
    for (;;) {
      auto conn = server.accept();
      try {
        serve_dwa_echo(*conn);
      } catch (const std::exception& e) {
        std::cerr << "dwa_echo_planner: session failed: " << e.what() << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "dwa_echo_planner: " << e.what() << "\n";
    return 1;
  }
}
