fn main() {
    std::process::exit(wlan_lba::cli::run_command(std::env::args_os()));
}
