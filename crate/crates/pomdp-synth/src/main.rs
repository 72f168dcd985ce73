fn main() {
    env_logger::init();
    let code = pomdp_synth::cli::run(std::env::args().collect());
    std::process::exit(code);
}
