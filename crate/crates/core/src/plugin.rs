//! Wire protocol for external enhancer processes.
//!
//! Request (little-endian):
//!
//! ```text
//! "ENH1" | frame_id u32 | src_w u16 | src_h u16 | target_w u16 | target_h u16
//!        | channels u8 | reserved u8 (=0) | src_w*src_h*channels bytes
//! ```
//!
//! Response:
//!
//! ```text
//! "ENH1" | frame_id u32 (echoed) | status u8 (0 ok, 1 model error)
//!        | target_w*target_h*channels bytes when status = 0
//! ```
//!
//! Framing is identical over stdio and TCP. One request is in flight per
//! connection.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::scaling::{upscale_traditional, Interpolation};

pub const MAGIC: [u8; 4] = *b"ENH1";
pub const REQUEST_HEADER_LEN: usize = 18;
pub const RESPONSE_HEADER_LEN: usize = 9;

pub const STATUS_OK: u8 = 0;
pub const STATUS_MODEL_ERROR: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginRequest {
    pub frame_id: u32,
    pub src_w: u16,
    pub src_h: u16,
    pub target_w: u16,
    pub target_h: u16,
    pub channels: u8,
    pub payload: Vec<u8>,
}

impl PluginRequest {
    pub fn for_frame(frame: &Frame, target_w: usize, target_h: usize) -> Result<Self> {
        let dim = |v: usize, what: &str| {
            u16::try_from(v).map_err(|_| Error::Protocol(format!("{what} {v} does not fit in u16")))
        };
        Ok(PluginRequest {
            // ids wrap: the field only pairs a reply with its request
            frame_id: frame.id() as u32,
            src_w: dim(frame.width(), "source width")?,
            src_h: dim(frame.height(), "source height")?,
            target_w: dim(target_w, "target width")?,
            target_h: dim(target_h, "target height")?,
            channels: frame.channels() as u8,
            payload: frame.pixels().to_vec(),
        })
    }

    pub fn to_frame(&self) -> Result<Frame> {
        Frame::new(
            usize::from(self.src_w),
            usize::from(self.src_h),
            usize::from(self.channels),
            self.payload.clone(),
        )
    }

    pub fn target_len(&self) -> usize {
        usize::from(self.target_w) * usize::from(self.target_h) * usize::from(self.channels)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(REQUEST_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.extend_from_slice(&self.src_w.to_le_bytes());
        out.extend_from_slice(&self.src_h.to_le_bytes());
        out.extend_from_slice(&self.target_w.to_le_bytes());
        out.extend_from_slice(&self.target_h.to_le_bytes());
        out.push(self.channels);
        out.push(0);
        out.extend_from_slice(&self.payload);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginResponse {
    pub frame_id: u32,
    pub status: u8,
    pub payload: Vec<u8>,
}

impl PluginResponse {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(RESPONSE_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.push(self.status);
        if self.status == STATUS_OK {
            out.extend_from_slice(&self.payload);
        }
        out
    }
}

/// Reads one request. `Ok(None)` on a clean end of stream; malformed framing
/// is a protocol error and the caller should drop the connection.
pub fn read_request(r: &mut impl Read) -> Result<Option<PluginRequest>> {
    let mut header = [0u8; REQUEST_HEADER_LEN];
    match read_full(r, &mut header) {
        Ok(0) => return Ok(None),
        Ok(n) if n < REQUEST_HEADER_LEN => {
            return Err(Error::Protocol(format!("request header cut short at {n} bytes")))
        }
        Ok(_) => {}
        Err(e) => return Err(Error::Protocol(e.to_string())),
    }
    if header[..4] != MAGIC {
        return Err(Error::Protocol("bad request magic".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]);
    let req = PluginRequest {
        frame_id: u32::from_le_bytes(header[4..8].try_into().unwrap()),
        src_w: u16_at(8),
        src_h: u16_at(10),
        target_w: u16_at(12),
        target_h: u16_at(14),
        channels: header[16],
        payload: Vec::new(),
    };
    if header[17] != 0 {
        return Err(Error::Protocol("reserved byte must be 0".into()));
    }
    if req.channels != 1 && req.channels != 3 {
        return Err(Error::Protocol(format!("{} channels", req.channels)));
    }
    if req.target_w < req.src_w || req.target_h < req.src_h {
        return Err(Error::Protocol("target smaller than source".into()));
    }
    let len = usize::from(req.src_w) * usize::from(req.src_h) * usize::from(req.channels);
    let mut payload = vec![0u8; len];
    let got = read_full(r, &mut payload).map_err(|e| Error::Protocol(e.to_string()))?;
    if got != len {
        return Err(Error::Protocol(format!(
            "request payload cut short: {got} of {len} bytes"
        )));
    }
    Ok(Some(PluginRequest { payload, ..req }))
}

/// Reads until `buf` is full or the stream ends; returns bytes read.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Serves requests until the client hangs up, answering each with
/// `model(request)`: `Some(frame)` is sent with status 0, `None` as a model
/// error. Returns an error (after which the connection should be closed) on
/// malformed framing.
pub fn serve<R: Read, W: Write>(
    mut reader: R,
    mut writer: W,
    mut model: impl FnMut(&PluginRequest) -> Option<Frame>,
) -> Result<()> {
    let wr = |e: io::Error| Error::Protocol(e.to_string());
    while let Some(req) = read_request(&mut reader)? {
        let resp = match model(&req) {
            Some(frame)
                if frame.dims()
                    == (
                        usize::from(req.target_w),
                        usize::from(req.target_h),
                        usize::from(req.channels),
                    ) =>
            {
                PluginResponse {
                    frame_id: req.frame_id,
                    status: STATUS_OK,
                    payload: frame.into_pixels(),
                }
            }
            _ => PluginResponse {
                frame_id: req.frame_id,
                status: STATUS_MODEL_ERROR,
                payload: Vec::new(),
            },
        };
        writer.write_all(&resp.encode()).map_err(wr)?;
        writer.flush().map_err(wr)?;
    }
    Ok(())
}

/// Conformance double: answers every request with this crate's bicubic
/// upscale.
pub fn serve_bicubic<R: Read, W: Write>(reader: R, writer: W) -> Result<()> {
    serve(reader, writer, |req| {
        let frame = req.to_frame().ok()?;
        upscale_traditional(
            &frame,
            usize::from(req.target_w),
            usize::from(req.target_h),
            Interpolation::Bicubic,
        )
        .ok()
    })
}

/// Client handle to an enhancer process. Requests are serialized through
/// `&mut self`.
pub struct EnhancerClient {
    reader: Box<dyn Read + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl EnhancerClient {
    pub fn from_streams(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        EnhancerClient {
            reader: Box::new(BufReader::new(reader)),
            writer: Box::new(BufWriter::new(writer)),
            child: None,
        }
    }

    /// Starts `program args...` and talks to it over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::EnhancerUnavailable(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = EnhancerClient::from_streams(stdout, stdin);
        client.child = Some(child);
        Ok(client)
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| Error::EnhancerUnavailable(format!("connect: {e}")))?;
        let _ = stream.set_nodelay(true);
        let read_half = stream
            .try_clone()
            .map_err(|e| Error::EnhancerUnavailable(e.to_string()))?;
        Ok(EnhancerClient::from_streams(read_half, stream))
    }

    pub fn enhance(&mut self, frame: &Frame, target_w: usize, target_h: usize) -> Result<Frame> {
        let req = PluginRequest::for_frame(frame, target_w, target_h)?;
        let unavailable = |e: io::Error| Error::EnhancerUnavailable(e.to_string());
        self.writer.write_all(&req.encode()).map_err(unavailable)?;
        self.writer.flush().map_err(unavailable)?;

        let mut header = [0u8; RESPONSE_HEADER_LEN];
        let got = read_full(&mut self.reader, &mut header).map_err(unavailable)?;
        if got == 0 {
            return Err(Error::EnhancerUnavailable("enhancer closed the connection".into()));
        }
        if got < RESPONSE_HEADER_LEN {
            return Err(Error::Protocol(format!("response header cut short at {got} bytes")));
        }
        if header[..4] != MAGIC {
            return Err(Error::Protocol("bad response magic".into()));
        }
        let id = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if id != req.frame_id {
            return Err(Error::Protocol(format!(
                "response for frame {id}, expected {}",
                req.frame_id
            )));
        }
        match header[8] {
            STATUS_OK => {}
            STATUS_MODEL_ERROR => return Err(Error::EnhancerUnavailable(format!("model failed on frame {id}"))),
            s => return Err(Error::Protocol(format!("unknown status {s}"))),
        }
        let len = req.target_len();
        let mut payload = vec![0u8; len];
        let got = read_full(&mut self.reader, &mut payload).map_err(unavailable)?;
        if got != len {
            return Err(Error::Protocol(format!(
                "reply payload has {got} bytes, {target_w}x{target_h}x{} needs {len}",
                frame.channels()
            )));
        }
        Ok(Frame::new(target_w, target_h, frame.channels(), payload)?.with_timing(frame.id(), frame.capture_time()))
    }
}

impl Drop for EnhancerClient {
    fn drop(&mut self) {
        let _ = self.writer.flush();
        if let Some(mut child) = self.child.take() {
            // closing stdin lets a well-behaved plugin exit on its own
            self.writer = Box::new(io::sink());
            if child.try_wait().ok().flatten().is_none() {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
    }
}
