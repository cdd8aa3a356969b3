//! Large fan-outs: executors hand them to the proxy, which looks the
//! fan-out up in the registered DAG and invokes one executor per out-edge
//! through a pool of fan-out invokers.

use std::sync::Arc;

use futures::future::join_all;
use futures::StreamExt;
use thiserror::Error;

use super::{proxy_channel, FanOutRequest, KvClient, KvStore, Message};
use crate::events::{Actor, Detail, EventKind};
use crate::platform::{Platform, PlatformError, Position, RequestBody};
use crate::schedule::FanOutId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyConfig {
    /// Fan-outs with more out-edges than this are handled by the proxy.
    pub max_task_fanout: usize,
    pub num_invokers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProxyError {
    #[error("run `{0}` is not registered")]
    UnknownRun(String),
    #[error("fan-out `{0}` is not part of the registered DAG")]
    UnknownFanOut(FanOutId),
    #[error("fan-out `{fanout}` has degree {degree}, not above the threshold {threshold}")]
    BelowThreshold {
        fanout: FanOutId,
        degree: usize,
        threshold: usize,
    },
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

/// Invokes one executor per out-edge of the requested fan-out, spread
/// round-robin over the fan-out invokers. Returns the number invoked.
pub async fn proxy_handle_fanout(
    req: &FanOutRequest,
    platform: &Arc<Platform>,
    kv: &KvStore,
    cfg: &ProxyConfig,
) -> Result<usize, ProxyError> {
    let info = kv
        .run_info(&req.run)
        .ok_or_else(|| ProxyError::UnknownRun(req.run.clone()))?;
    let pos = info
        .schedules
        .fanout(&req.fanout)
        .ok_or_else(|| ProxyError::UnknownFanOut(req.fanout.clone()))?;
    let targets = info.graph.out_edges(&pos.source).to_vec();
    if targets.len() <= cfg.max_task_fanout {
        return Err(ProxyError::BelowThreshold {
            fanout: req.fanout.clone(),
            degree: targets.len(),
            threshold: cfg.max_task_fanout,
        });
    }
    platform.log().log(
        EventKind::Fanout,
        Actor::SERVICE,
        Detail {
            task: Some(pos.source.clone()),
            fanout: Some(req.fanout.to_string()),
            count: Some(targets.len()),
            via: Some("proxy".into()),
            ..Detail::default()
        },
    );
    let workers = cfg.num_invokers.clamp(1, targets.len());
    let jobs = (0..workers).map(|w| {
        let mine: Vec<_> = targets.iter().skip(w).step_by(workers).cloned().collect();
        let platform = platform.clone();
        let source = pos.source.clone();
        let via = format!("proxy-{w}");
        async move {
            for target in mine {
                let body = RequestBody::Executor {
                    leaf: req.leaf.clone(),
                    entry: Position::Edge {
                        from: source.clone(),
                        to: target,
                    },
                    inputs: req.inputs.clone(),
                };
                platform.invoke(Actor::SERVICE, &req.run, body, &via).await?;
            }
            Ok::<(), PlatformError>(())
        }
    });
    for r in join_all(jobs).await {
        r?;
    }
    Ok(targets.len())
}

/// Starts the proxy service for `run`. It is subscribed to its channel by
/// the time this returns and serves requests concurrently.
pub fn spawn_proxy(platform: Arc<Platform>, kv: KvClient, run: &str, cfg: ProxyConfig) {
    let mut rx = kv.subscribe(&proxy_channel(run));
    let rt = platform.rt().clone();
    let spawner = rt.clone();
    rt.spawn(Box::pin(async move {
        while let Some(msg) = rx.next().await {
            let Message::FanOut(req) = msg else { continue };
            let (platform, kv, cfg) = (platform.clone(), kv.clone(), cfg.clone());
            spawner.spawn(Box::pin(async move {
                if let Err(e) = proxy_handle_fanout(&req, &platform, kv.store(), &cfg).await {
                    platform
                        .log()
                        .log(EventKind::Fail, Actor::SERVICE, Detail::reason(format!("proxy: {e}")));
                }
            }));
        }
    }));
}
