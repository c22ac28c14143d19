use astbench_core::bridge::stub::{canned, chat_response, scripted, StubServer};
use astbench_core::bridge::{BridgeError, BridgeSettings, Client, GenParams, ModelEndpoint};

fn endpoint(server: &StubServer, env: &str) -> ModelEndpoint {
    ModelEndpoint {
        base_url: server.base_url(),
        model_id: "stub-model".into(),
        auth_token_env: env.into(),
        request_timeout_s: 10.0,
    }
}

fn fast() -> BridgeSettings {
    BridgeSettings {
        max_concurrency: 2,
        max_retries: 3,
        backoff_ms: 5,
    }
}

#[test]
fn canned_block_comes_back_verbatim() {
    let text = "```python\ndef __main__():\n    return 1\n```";
    let server = StubServer::start(canned(text)).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    let c = client.request_completion("hi", &GenParams::default()).unwrap();
    assert_eq!(c.text, text);
    assert_eq!(c.retries, 0);
    assert!(c.greedy);
}

#[test]
fn rate_limit_is_retried() {
    let limited = (429, r#"{"error":{"message":"slow down"}}"#.to_string());
    let server = StubServer::start(scripted(vec![limited.clone(), limited, (200, chat_response("ok"))])).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    let c = client.request_completion("hi", &GenParams::default()).unwrap();
    assert_eq!(c.text, "ok");
    assert_eq!(c.retries, 2);
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = StubServer::start(scripted(vec![(503, "down".into())])).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    let err = client.request_completion("hi", &GenParams::default()).unwrap_err();
    assert_eq!(err, BridgeError::Http { status: 503, body: "down".into() });
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn missing_credential_fails_before_any_request() {
    let server = StubServer::start(canned("x")).unwrap();
    let err = Client::new(endpoint(&server, "ASTBENCH_TEST_UNSET_TOKEN_VAR"), fast()).unwrap_err();
    assert!(err.is_config(), "{err}");
    assert!(server.requests().is_empty());
}

#[test]
fn greedy_temperature_goes_on_the_wire() {
    std::env::set_var("ASTBENCH_TEST_TOKEN", "sk-test-secret");
    let server = StubServer::start(canned("x")).unwrap();
    let client = Client::new(endpoint(&server, "ASTBENCH_TEST_TOKEN"), fast()).unwrap();
    client.request_completion("the prompt", &GenParams::default()).unwrap();
    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    assert_eq!(reqs[0].body["temperature"], serde_json::json!(0.0));
    assert_eq!(reqs[0].body["messages"].as_array().unwrap().len(), 1);
    assert_eq!(reqs[0].body["messages"][0]["role"], "user");
    assert_eq!(reqs[0].body["messages"][0]["content"], "the prompt");
    assert!(reqs[0].had_auth);
    assert!(!format!("{client:?}").contains("sk-test-secret"));
}

#[test]
fn refused_greedy_falls_back_to_sampling() {
    let refusal = (400, r#"{"error":{"message":"temperature must be > 0"}}"#.to_string());
    let server = StubServer::start(scripted(vec![refusal, (200, chat_response("ok"))])).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    let c = client.request_completion("hi", &GenParams::default()).unwrap();
    assert!(!c.greedy);
    assert_eq!(c.temperature, 0.01);
    assert_eq!(server.requests()[1].body["temperature"], serde_json::json!(0.01));
}

#[test]
fn auth_and_malformed_errors() {
    let server = StubServer::start(scripted(vec![(401, "no".into())])).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    assert_eq!(client.request_completion("hi", &GenParams::default()), Err(BridgeError::Auth(401)));
    assert_eq!(server.requests().len(), 1);

    let server = StubServer::start(scripted(vec![(200, "{}".into())])).unwrap();
    let client = Client::new(endpoint(&server, ""), fast()).unwrap();
    assert!(matches!(
        client.request_completion("hi", &GenParams::default()),
        Err(BridgeError::Malformed(_))
    ));
}

#[test]
fn relative_base_url_is_rejected() {
    let ep = ModelEndpoint {
        base_url: "localhost/v1".into(),
        model_id: "m".into(),
        auth_token_env: String::new(),
        request_timeout_s: 1.0,
    };
    assert!(Client::new(ep, fast()).unwrap_err().is_config());
}
