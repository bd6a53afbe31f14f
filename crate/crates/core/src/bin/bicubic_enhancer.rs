//! Enhancer plugin that answers every request with bicubic interpolation.
//!
//! `bicubic-enhancer [--transport stdio|tcp] [--port N]`

use std::io::{self, BufReader, BufWriter};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use semstream::plugin::serve_bicubic;

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Stdio,
    Tcp,
}

#[derive(Parser)]
#[command(about = "Bicubic stand-in for the enhancement plugin")]
struct Args {
    #[arg(long, value_enum, default_value = "stdio")]
    transport: Transport,
    /// TCP port (0 picks a free one; the bound address is printed).
    #[arg(long, default_value_t = 0)]
    port: u16,
    /// Ignored; accepted for command-line compatibility with real plugins.
    #[arg(long)]
    model: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.transport {
        Transport::Stdio => serve_bicubic(BufReader::new(io::stdin().lock()), io::stdout().lock()),
        Transport::Tcp => serve_tcp(args.port),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bicubic-enhancer: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve_tcp(port: u16) -> semstream::Result<()> {
    let io_err = |e: io::Error| semstream::Error::Protocol(e.to_string());
    let listener = TcpListener::bind(("127.0.0.1", port)).map_err(io_err)?;
    println!("{}", listener.local_addr().map_err(io_err)?);
    for stream in listener.incoming() {
        let stream = stream.map_err(io_err)?;
        let reader = BufReader::new(stream.try_clone().map_err(io_err)?);
        if let Err(e) = serve_bicubic(reader, BufWriter::new(stream)) {
            eprintln!("bicubic-enhancer: {e}");
        }
    }
    Ok(())
}
