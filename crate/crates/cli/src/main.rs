fn main() {
    std::process::exit(wavesweep_cli::main_with(std::env::args_os()));
}
