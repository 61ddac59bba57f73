import warnings

# starlette's test client emits a deprecation notice on import; it is the
# supported sync transport for the embedded service, so keep the suite quiet
warnings.filterwarnings(
    "ignore",
    message="Using `httpx` with `starlette.testclient` is deprecated",
)
