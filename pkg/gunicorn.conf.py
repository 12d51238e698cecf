# Gunicorn configuration file

# Server socket
bind = "0.0.0.0:8080"

# Worker processes
workers = 2
worker_class = "gthread"
threads = 2

# Timeout settings (campaign requests run in-process)
timeout = 300
keepalive = 2

# Logging
accesslog = "-"
errorlog = "-"
loglevel = "info"

# Process naming
proc_name = "relent-bounds"

# Server mechanics
daemon = False
pidfile = "/tmp/gunicorn.pid"
user = None
group = None

# Restart workers periodically
max_requests = 200
max_requests_jitter = 20
preload_app = True

# Security
limit_request_line = 4094
limit_request_fields = 100
limit_request_field_size = 8190
