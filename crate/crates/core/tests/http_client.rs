use std::sync::Arc;

use quizforge_core::generation::mock::{
    spawn_server, FixedBackend, MockQuizBackend, ScriptedBackend,
};
use quizforge_core::generation::{
    generate_one, run_batch, BatchPolicy, ChatBackend, HttpChatClient, ModelConfig, RequestError,
    RunContext,
};
use quizforge_core::model::{SourceDocument, Subject};
use quizforge_core::prompting::{builtin_templates, RenderParams};

async fn serve(backend: Arc<dyn ChatBackend>) -> String {
    let addr = spawn_server("127.0.0.1:0".parse().unwrap(), backend)
        .await
        .unwrap();
    format!("http://{addr}/v1")
}

fn cfg(url: &str, key_env: &str) -> ModelConfig {
    ModelConfig {
        endpoint_url: url.into(),
        api_key_env: key_env.into(),
        timeout_secs: 5.0,
        ..ModelConfig::default()
    }
}

#[tokio::test]
async fn canned_content_is_returned_verbatim() {
    let canned = "[{\"question\": \"Soru?\", \"answer\": \"Cevap\"}]\n";
    let url = serve(Arc::new(FixedBackend(canned.into()))).await;
    let cfg = cfg(&url, "");
    let client = HttpChatClient::new(&cfg).unwrap();
    assert!(client.url().ends_with("/v1/chat/completions"));
    assert_eq!(
        generate_one(&client, "merhaba", &cfg).await.unwrap(),
        canned
    );
}

#[tokio::test]
async fn http_429_maps_to_rate_limited() {
    let backend = ScriptedBackend::failing_first(
        1,
        RequestError::RateLimited {
            retry_after_secs: Some(7),
        },
        Arc::new(FixedBackend("ok".into())),
    );
    let url = serve(Arc::new(backend)).await;
    let cfg = cfg(&url, "");
    let client = HttpChatClient::new(&cfg).unwrap();
    let err = generate_one(&client, "x", &cfg).await.unwrap_err();
    assert_eq!(
        err,
        RequestError::RateLimited {
            retry_after_secs: Some(7)
        }
    );
    assert!(err.is_retryable());
    assert_eq!(generate_one(&client, "x", &cfg).await.unwrap(), "ok");
}

#[tokio::test]
async fn server_errors_and_auth_failures() {
    let backend = ScriptedBackend::new(
        [
            Err(RequestError::HttpStatus {
                status: 502,
                body: String::new(),
            }),
            Err(RequestError::Auth {
                message: "bad key".into(),
            }),
        ],
        Arc::new(FixedBackend("ok".into())),
    );
    let url = serve(Arc::new(backend)).await;
    let cfg = cfg(&url, "");
    let client = HttpChatClient::new(&cfg).unwrap();
    let err = generate_one(&client, "x", &cfg).await.unwrap_err();
    assert!(
        matches!(err, RequestError::HttpStatus { status: 502, .. }),
        "{err:?}"
    );
    let err = generate_one(&client, "x", &cfg).await.unwrap_err();
    assert!(matches!(err, RequestError::Auth { .. }));
    assert!(!err.is_retryable());
}

#[tokio::test]
async fn missing_key_fails_before_any_request() {
    // Nothing listens on the discard port; an attempted request would be a
    // transport error rather than an auth error.
    let cfg = cfg(
        "http://127.0.0.1:9/v1",
        "QUIZFORGE_TEST_KEY_THAT_IS_NOT_SET",
    );
    let client = HttpChatClient::new(&cfg).unwrap();
    let err = generate_one(&client, "x", &cfg).await.unwrap_err();
    assert!(matches!(err, RequestError::Auth { .. }), "{err:?}");
}

#[tokio::test]
async fn batch_over_http_with_transient_failures() {
    let params = RenderParams::default();
    let backend = ScriptedBackend::failing_first(
        2,
        RequestError::HttpStatus {
            status: 500,
            body: String::new(),
        },
        Arc::new(MockQuizBackend::new(params)),
    );
    let url = serve(Arc::new(backend)).await;
    let model = cfg(&url, "");
    let client: Arc<dyn ChatBackend> = Arc::new(HttpChatClient::new(&model).unwrap());
    let docs: Vec<SourceDocument> = (0..3)
        .map(|i| SourceDocument {
            id: format!("d{i}"),
            subject: Subject::Geography,
            title: "Akarsular".into(),
            body: "Kızılırmak Türkiye sınırları içinde doğup denize dökülen en uzun akarsudur. \
                   Fırat ve Dicle güneydoğuda akar."
                .into(),
            source_url: None,
            token_count: 16,
        })
        .collect();
    let policy = BatchPolicy {
        max_concurrency: 1,
        requests_per_minute: 60_000,
        backoff_base_secs: 0.01,
        ..BatchPolicy::default()
    };
    let ctx = RunContext::new(None, "2024-01-01T00:00:00Z".parse().unwrap());
    let report = run_batch(
        client,
        &docs,
        &builtin_templates(),
        &params,
        &model,
        &policy,
        &ctx,
    )
    .await
    .unwrap();
    assert_eq!(report.summary.ok, 3);
    assert_eq!(report.outcomes[0].attempts, 3);
    assert_eq!(report.outcomes[1].attempts, 1);
}
