fn main() {
    std::process::exit(dfrt_cli::dispatch(std::env::args_os()));
}
