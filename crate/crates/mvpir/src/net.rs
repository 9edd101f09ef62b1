//! Networked realization: a stateless server daemon over TCP and a client
//! that retrieves one symbol from `q` servers with exact byte accounting.
//!
//! Transport is a plain stream socket with length-prefixed frames and no
//! TLS. The privacy guarantee here is information theoretic *against the
//! servers themselves* — each server's query is uniformly distributed
//! whatever the target index is — and says nothing about a network
//! eavesdropper, who in this model may see everything and still learns only
//! what a server would. Callers needing transport privacy must tunnel.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use rand::Rng;
use thiserror::Error;

use crate::encode::{AnswerBundle, EncodeError, EncodedDatabase};
use crate::family::{FamilyError, MvFamily};
use crate::scheme::{Scheme, SchemeConfig, SchemeError};
use crate::wire::{
    binding_hash, decode_answer, encode_answer, error_code, Frame, Hello, MsgType, WireError,
};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("cannot reach server {addr}: {source}")]
    Unreachable {
        addr: String,
        source: std::io::Error,
    },
    #[error("server {addr} is incompatible: {reason}")]
    HelloMismatch { addr: String, reason: String },
    #[error("server {addr} replied with error {code}: {message}")]
    ServerError {
        addr: String,
        code: u8,
        message: String,
    },
    #[error("server {addr} sent an unexpected {got:?} frame")]
    UnexpectedFrame { addr: String, got: MsgType },
    #[error("need {expected} server addresses, got {got}")]
    ServerCount { expected: usize, got: usize },
    #[error("database does not fit the family: {0}")]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exact per-retrieval communication accounting, in body bytes (the frame
/// headers are constant transport overhead, not protocol payload).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub variant: String,
    pub n: usize,
    pub k: usize,
    pub bytes_up: Vec<u64>,
    pub bytes_down: Vec<u64>,
}

impl CostReport {
    pub fn total(&self) -> u64 {
        self.bytes_up.iter().sum::<u64>() + self.bytes_down.iter().sum::<u64>()
    }
}

/// One server: an immutable scheme plus the encoded database, shared across
/// connection threads. It never sees the target index — only query points —
/// and keeps no per-request state.
pub struct PirServer {
    scheme: Scheme,
    db: EncodedDatabase,
    hello: Hello,
}

impl PirServer {
    pub fn new(
        cfg: SchemeConfig,
        family: &MvFamily,
        symbols: &[u8],
    ) -> Result<Arc<Self>, NetError> {
        let scheme = Scheme::new(cfg)?;
        scheme.check_family(family)?;
        scheme.validate_symbols(symbols)?;
        let db = EncodedDatabase::encode(symbols, family)?;
        let hello = Hello {
            scheme_id: scheme.config().scheme_id(),
            m: scheme.config().m,
            k: family.k() as u16,
            binding_hash: binding_hash(scheme.config(), family),
        };
        Ok(Arc::new(PirServer { scheme, db, hello }))
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Drive one connection: send the HELLO, then answer QUERY frames until
    /// the peer goes away. Semantic problems get an ERROR reply and the
    /// session continues; unparseable or oversized input closes the stream.
    pub fn handle_connection<S: Read + Write>(&self, mut stream: S) {
        if stream.write_all(&self.hello.encode()).is_err() {
            return;
        }
        loop {
            let frame = match Frame::read_from(&mut stream) {
                Ok(frame) => frame,
                Err(WireError::UnsupportedVersion(v)) => {
                    let _ = Frame::error(
                        self.hello.scheme_id,
                        error_code::UNSUPPORTED_VERSION,
                        &format!("version {v} not supported"),
                    )
                    .write_to(&mut stream);
                    return;
                }
                Err(WireError::BadMagic) | Err(WireError::UnknownMsgType(_)) => {
                    let _ = Frame::error(
                        self.hello.scheme_id,
                        error_code::MALFORMED,
                        "unparseable frame",
                    )
                    .write_to(&mut stream);
                    return;
                }
                // oversized bodies and dead streams: drop the connection
                Err(_) => return,
            };
            let reply = self.answer_frame(&frame);
            if reply.write_to(&mut stream).is_err() {
                return;
            }
        }
    }

    /// The request/reply core, independent of any transport: QUERY in,
    /// ANSWER or ERROR out.
    pub fn answer_frame(&self, frame: &Frame) -> Frame {
        let id = self.hello.scheme_id;
        if frame.msg_type != MsgType::Query {
            return Frame::error(id, error_code::MALFORMED, "expected a QUERY frame");
        }
        if frame.scheme_id != id {
            return Frame::error(
                id,
                error_code::SCHEME_MISMATCH,
                &format!("serving scheme {id}, not {}", frame.scheme_id),
            );
        }
        if frame.body.len() != self.db.k() {
            return Frame::error(
                id,
                error_code::BAD_LENGTH,
                &format!("query must be {} bytes, got {}", self.db.k(), frame.body.len()),
            );
        }
        match self.scheme.server_answer(&self.db, &frame.body) {
            Ok(bundle) => Frame::answer(id, encode_answer(&bundle)),
            Err(e) => Frame::error(id, error_code::MALFORMED, &e.to_string()),
        }
    }
}

/// Handle to a server accept-loop running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // poke the listener out of accept()
        let _ = TcpStream::connect(self.addr);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
    }
}

/// Accept connections on a background thread, one handler thread each.
pub fn spawn_server(server: Arc<PirServer>, listener: TcpListener) -> std::io::Result<ServerHandle> {
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let join = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let _ = stream.set_read_timeout(Some(Duration::from_secs(30)));
            let server = Arc::clone(&server);
            std::thread::spawn(move || server.handle_connection(stream));
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        join: Some(join),
    })
}

/// Load everything from disk and serve forever on `listen`.
pub fn serve(
    db_path: &Path,
    family_path: &Path,
    cfg: SchemeConfig,
    listen: &str,
) -> Result<(), NetError> {
    let (server, listener) = bind_server(db_path, family_path, cfg, listen)?;
    eprintln!("listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let _ = stream.set_read_timeout(Some(Duration::from_secs(300)));
        let server = Arc::clone(&server);
        std::thread::spawn(move || server.handle_connection(stream));
    }
    Ok(())
}

/// Shared setup for `serve` and the CLI: validates the database against the
/// family before the socket ever opens.
pub fn bind_server(
    db_path: &Path,
    family_path: &Path,
    cfg: SchemeConfig,
    listen: &str,
) -> Result<(Arc<PirServer>, TcpListener), NetError> {
    let family = MvFamily::load(family_path)?;
    let symbols = std::fs::read(db_path)?;
    let server = PirServer::new(cfg, &family, &symbols)?;
    let listener = TcpListener::bind(listen)?;
    Ok((server, listener))
}

/// Retrieve `a_tau` from exactly `q` servers.
///
/// All connections are established and their HELLOs verified before any
/// query leaves the client: an unreachable or mismatched server aborts the
/// retrieval with nothing revealed, rather than degrading to a partial
/// protocol.
pub fn retrieve(
    cfg: &SchemeConfig,
    family: &MvFamily,
    addrs: &[String],
    tau: usize,
    rng: &mut impl Rng,
) -> Result<(u8, CostReport), NetError> {
    let scheme = Scheme::new(cfg.clone())?;
    if addrs.len() != cfg.servers {
        return Err(NetError::ServerCount {
            expected: cfg.servers,
            got: addrs.len(),
        });
    }
    let expected_hash = binding_hash(cfg, family);

    let mut streams = Vec::with_capacity(addrs.len());
    for addr in addrs {
        let mut stream = TcpStream::connect(addr).map_err(|source| NetError::Unreachable {
            addr: addr.clone(),
            source,
        })?;
        stream.set_read_timeout(Some(Duration::from_secs(30)))?;
        let hello = Hello::read_from(&mut stream)?;
        let mismatch = if hello.scheme_id != cfg.scheme_id() {
            Some(format!(
                "scheme id {} (expected {})",
                hello.scheme_id,
                cfg.scheme_id()
            ))
        } else if hello.m != cfg.m || hello.k as usize != family.k() {
            Some(format!(
                "parameters m={} k={} (expected m={} k={})",
                hello.m,
                hello.k,
                cfg.m,
                family.k()
            ))
        } else if hello.binding_hash != expected_hash {
            Some("family/config hash differs".into())
        } else {
            None
        };
        if let Some(reason) = mismatch {
            return Err(NetError::HelloMismatch {
                addr: addr.clone(),
                reason,
            });
        }
        streams.push(stream);
    }

    let state = scheme.query_gen(family, tau, rng)?;
    let mut bytes_up = Vec::with_capacity(addrs.len());
    let mut bytes_down = Vec::with_capacity(addrs.len());
    let mut answers: Vec<AnswerBundle> = Vec::with_capacity(addrs.len());
    for (i, stream) in streams.iter_mut().enumerate() {
        let query = Frame::query(cfg.scheme_id(), state.query(i));
        bytes_up.push(query.body.len() as u64);
        query.write_to(stream)?;
        let frame = Frame::read_from(stream)?;
        match frame.msg_type {
            MsgType::Answer => {
                bytes_down.push(frame.body.len() as u64);
                answers.push(decode_answer(cfg, family.k(), &frame.body)?);
            }
            MsgType::Error => {
                let (code, message) = frame.error_parts()?;
                return Err(NetError::ServerError {
                    addr: addrs[i].clone(),
                    code,
                    message,
                });
            }
            other => {
                return Err(NetError::UnexpectedFrame {
                    addr: addrs[i].clone(),
                    got: other,
                });
            }
        }
    }

    let symbol = scheme.reconstruct(family, &state, &answers)?;
    Ok((
        symbol,
        CostReport {
            variant: cfg.variant.name().to_string(),
            n: family.len(),
            k: family.k(),
            bytes_up,
            bytes_down,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::search_family;
    use crate::scheme::HomTarget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bit_db(rng: &mut impl Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2)).collect()
    }

    fn spawn_cluster(
        cfg: &SchemeConfig,
        family: &MvFamily,
        symbols: &[u8],
        count: usize,
    ) -> (Vec<ServerHandle>, Vec<String>) {
        let mut handles = Vec::new();
        let mut addrs = Vec::new();
        for _ in 0..count {
            let server = PirServer::new(cfg.clone(), family, symbols).unwrap();
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let handle = spawn_server(server, listener).unwrap();
            addrs.push(handle.addr().to_string());
            handles.push(handle);
        }
        (handles, addrs)
    }

    #[test]
    fn two_server_loopback_retrieval_with_exact_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let family = search_family(6, 5, &[1, 3, 4], 6, 70, 10_000_000).unwrap();
        let symbols = bit_db(&mut rng, family.len());
        let cfg = SchemeConfig::mv_2server();
        let (handles, addrs) = spawn_cluster(&cfg, &family, &symbols, 2);
        for (tau, &want) in symbols.iter().enumerate() {
            let (bit, cost) = retrieve(&cfg, &family, &addrs, tau, &mut rng).unwrap();
            assert_eq!(bit, want);
            assert_eq!(cost.bytes_up, vec![5, 5]);
            assert_eq!(cost.bytes_down, vec![36, 36]); // (k+1)·6
            assert_eq!(cost.total(), 2 * (5 + 36));
        }
        for h in handles {
            h.stop();
        }
    }

    #[test]
    fn four_server_loopback_retrieves_z30_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let s = crate::family::grolmusz_s(&[2, 3, 5]).unwrap();
        let family = search_family(30, 8, &s, 8, 71, 40_000_000).unwrap();
        let symbols: Vec<u8> = (0..family.len()).map(|_| rng.random_range(0..30)).collect();
        let cfg = SchemeConfig::mv_kserver(&[2, 3, 5]).unwrap();
        let (handles, addrs) = spawn_cluster(&cfg, &family, &symbols, 4);
        for (tau, &want) in symbols.iter().enumerate() {
            let (symbol, cost) = retrieve(&cfg, &family, &addrs, tau, &mut rng).unwrap();
            assert_eq!(symbol, want);
            assert_eq!(cost.bytes_up, vec![8; 4]);
            assert_eq!(cost.bytes_down, vec![9 * 30; 4]);
        }
        for h in handles {
            h.stop();
        }
    }

    #[test]
    fn unreachable_server_aborts_before_any_query() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let family = search_family(6, 4, &[1, 3, 4], 4, 72, 10_000_000).unwrap();
        let cfg = SchemeConfig::mv_2server();
        // one live server, one dead address
        let symbols = bit_db(&mut rng, family.len());
        let (handles, mut addrs) = spawn_cluster(&cfg, &family, &symbols, 1);
        let dead = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            let addr = l.local_addr().unwrap();
            drop(l);
            addr.to_string()
        };
        addrs.push(dead);
        match retrieve(&cfg, &family, &addrs, 0, &mut rng) {
            Err(NetError::Unreachable { .. }) => {}
            other => panic!("expected Unreachable, got {other:?}"),
        }
        for h in handles {
            h.stop();
        }
    }

    #[test]
    fn mismatched_family_hash_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let family_a = search_family(6, 4, &[1, 3, 4], 4, 73, 10_000_000).unwrap();
        let family_b = search_family(6, 4, &[1, 3, 4], 4, 74, 10_000_000).unwrap();
        assert_ne!(family_a, family_b);
        let cfg = SchemeConfig::mv_2server();
        let symbols = bit_db(&mut rng, family_a.len());
        let (handles, addrs) = spawn_cluster(&cfg, &family_a, &symbols, 2);
        match retrieve(&cfg, &family_b, &addrs, 0, &mut rng) {
            Err(NetError::HelloMismatch { .. }) => {}
            other => panic!("expected HelloMismatch, got {other:?}"),
        }
        for h in handles {
            h.stop();
        }
    }

    #[test]
    fn wrong_server_count_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let family = search_family(6, 4, &[1, 3, 4], 4, 75, 10_000_000).unwrap();
        let cfg = SchemeConfig::mv_2server();
        match retrieve(&cfg, &family, &["127.0.0.1:1".into()], 0, &mut rng) {
            Err(NetError::ServerCount { expected: 2, got: 1 }) => {}
            other => panic!("expected ServerCount, got {other:?}"),
        }
    }

    /// In-memory duplex used to exercise the session loop without sockets.
    struct Duplex {
        input: std::io::Cursor<Vec<u8>>,
        output: Vec<u8>,
    }

    impl Read for Duplex {
        fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
            self.input.read(buf)
        }
    }

    impl Write for Duplex {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.output.extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    fn session(server: &PirServer, input: Vec<u8>) -> Vec<u8> {
        let mut duplex = Duplex {
            input: std::io::Cursor::new(input),
            output: Vec::new(),
        };
        server.handle_connection(&mut duplex);
        duplex.output
    }

    fn test_server(cfg: SchemeConfig) -> Arc<PirServer> {
        let family = search_family(6, 4, &[1, 3, 4], 5, 76, 10_000_000).unwrap();
        let symbols = vec![1, 0, 1, 1, 0];
        PirServer::new(cfg, &family, &symbols).unwrap()
    }

    #[test]
    fn identical_queries_get_identical_answer_bytes() {
        let server = test_server(SchemeConfig::mv_2server());
        let q = Frame::query(1, &[1, 2, 3, 4]).encode();
        let mut both = q.clone();
        both.extend_from_slice(&q);
        let out = session(&server, both);
        let (first, used) = Frame::decode(&out[crate::wire::HELLO_LEN..]).unwrap();
        let (second, _) = Frame::decode(&out[crate::wire::HELLO_LEN + used..]).unwrap();
        assert_eq!(first.msg_type, MsgType::Answer);
        assert_eq!(first, second);
    }

    #[test]
    fn wrong_length_query_gets_bad_length_error() {
        let server = test_server(SchemeConfig::mv_2server());
        let out = session(&server, Frame::query(1, &[1, 2, 3]).encode());
        let (frame, _) = Frame::decode(&out[crate::wire::HELLO_LEN..]).unwrap();
        let (code, _) = frame.error_parts().unwrap();
        assert_eq!(code, error_code::BAD_LENGTH);
    }

    #[test]
    fn scheme_mismatch_gets_its_error_code() {
        let server = test_server(SchemeConfig::mv_2server());
        let out = session(&server, Frame::query(4, &[1, 2, 3, 4]).encode());
        let (frame, _) = Frame::decode(&out[crate::wire::HELLO_LEN..]).unwrap();
        assert_eq!(frame.error_parts().unwrap().0, error_code::SCHEME_MISMATCH);
    }

    #[test]
    fn hom_variants_serve_one_byte_ring_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let family = search_family(6, 4, &[1, 3, 4], 5, 76, 10_000_000).unwrap();
        let symbols = vec![1, 0, 1, 1, 0];
        for target in [HomTarget::Z6, HomTarget::F3] {
            let cfg = SchemeConfig::mv_2server_hom(target);
            let (handles, addrs) = spawn_cluster(&cfg, &family, &symbols, 2);
            for (tau, &want) in symbols.iter().enumerate() {
                let (bit, cost) = retrieve(&cfg, &family, &addrs, tau, &mut rng).unwrap();
                assert_eq!(bit, want);
                assert_eq!(cost.bytes_down, vec![5, 5]); // (k+1)·1
            }
            for h in handles {
                h.stop();
            }
        }
    }

    #[test]
    fn fuzzed_sessions_never_panic_and_end_in_error_or_close() {
        let server = test_server(SchemeConfig::mv_2server());
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        for _ in 0..2000 {
            let len = rng.random_range(0..80usize);
            let garbage: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let out = session(&server, garbage);
            // HELLO always comes first; whatever follows is ERROR frames or
            // nothing at all (the session just closed).
            assert!(out.len() >= crate::wire::HELLO_LEN);
            let mut rest = &out[crate::wire::HELLO_LEN..];
            while !rest.is_empty() {
                let (frame, used) = Frame::decode(rest).expect("server output is well-formed");
                assert!(matches!(frame.msg_type, MsgType::Error | MsgType::Answer));
                rest = &rest[used..];
            }
        }
    }
}
