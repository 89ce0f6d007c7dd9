fn main() {
    std::process::exit(shutter_sim::run(std::env::args_os()));
}
