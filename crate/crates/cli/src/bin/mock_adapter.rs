//! Scripted tracker adapter for exercising the bridge end to end.
//!
//! Modes:
//!   echo                 answer every update with the init box
//!   gt-replay <file>     answer with the annotation of the requested frame
//!   fail-at <frame>      like echo, but report an error on that frame
//!   crash-at <frame>     like echo, but exit without answering on that frame
//!   garbage              answer the first request with a non-JSON line
//!   slow <ms>            like echo, sleeping before every answer

use std::io::{BufRead, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use fpvtrack_core::bridge::{decode_request, encode, Request, Response};
use fpvtrack_core::dataset::{parse_boxes, BoundingBox};

enum Mode {
    Echo,
    Replay(Vec<Option<BoundingBox>>),
    FailAt(usize),
    CrashAt(usize),
    Garbage,
    Slow(Duration),
}

fn parse_mode(args: &[String]) -> Result<Mode, String> {
    let arg = |i: usize| {
        args.get(i)
            .ok_or_else(|| format!("mode `{}` needs an argument", args[0]))
    };
    let frame = |i: usize| -> Result<usize, String> {
        arg(i)?
            .parse()
            .map_err(|_| format!("bad frame index `{}`", args[i]))
    };
    match args.first().map(String::as_str) {
        Some("echo") => Ok(Mode::Echo),
        Some("gt-replay") => {
            let path = arg(1)?;
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            parse_boxes(&text).map(Mode::Replay).map_err(|e| format!("{path}: {e}"))
        }
        Some("fail-at") => frame(1).map(Mode::FailAt),
        Some("crash-at") => frame(1).map(Mode::CrashAt),
        Some("garbage") => Ok(Mode::Garbage),
        Some("slow") => {
            let ms: u64 = arg(1)?.parse().map_err(|_| format!("bad delay `{}`", args[1]))?;
            Ok(Mode::Slow(Duration::from_millis(ms)))
        }
        _ => Err("usage: fpvtrack-mock-adapter echo|gt-replay <file>|fail-at <n>|crash-at <n>|garbage|slow <ms>".into()),
    }
}

/// Frame index encoded in a `%08d.png` file name.
fn frame_index(path: &str) -> Option<usize> {
    Path::new(path).file_stem()?.to_str()?.parse().ok()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = match parse_mode(&args) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    eprintln!(
        "mock adapter started (seed {})",
        std::env::var("TRACKER_SEED").unwrap_or_default()
    );

    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    let mut current: Option<BoundingBox> = None;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if matches!(mode, Mode::Garbage) {
            let _ = writeln!(stdout, "not json");
            let _ = stdout.flush();
            continue;
        }
        let reply = match decode_request(&line) {
            Err(e) => Response::Error {
                message: e.to_string(),
            },
            Ok(Request::Quit) => {
                eprintln!("quit");
                return ExitCode::SUCCESS;
            }
            Ok(Request::Init { frame, bbox }) => {
                current = Some(bbox);
                eprintln!("init {frame}");
                Response::Ok { bbox }
            }
            Ok(Request::Update { frame }) => {
                let index = frame_index(&frame);
                match (&mode, current) {
                    (_, None) => Response::Error {
                        message: "update before init".into(),
                    },
                    (Mode::FailAt(k), _) if index == Some(*k) => {
                        eprintln!("failing at frame {k}");
                        Response::Error {
                            message: format!("scripted failure at frame {k}"),
                        }
                    }
                    (Mode::CrashAt(k), _) if index == Some(*k) => {
                        eprintln!("crashing at frame {k}");
                        return ExitCode::from(3);
                    }
                    (Mode::Replay(gt), Some(last)) => {
                        let b = index
                            .and_then(|i| gt.get(i).copied().flatten())
                            .unwrap_or(last);
                        current = Some(b);
                        Response::Ok { bbox: b }
                    }
                    (Mode::Slow(d), Some(b)) => {
                        std::thread::sleep(*d);
                        Response::Ok { bbox: b }
                    }
                    (_, Some(b)) => Response::Ok { bbox: b },
                }
            }
        };
        if writeln!(stdout, "{}", encode(&reply))
            .and_then(|_| stdout.flush())
            .is_err()
        {
            break;
        }
    }
    ExitCode::SUCCESS
}
