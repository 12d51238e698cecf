import logging

from flask import Flask, jsonify

from commands import register_commands
from config import Config
from errors import RelEntError


def create_app(config_overrides=None):
    app = Flask(__name__)
    app.config.from_object(Config)
    if config_overrides:
        app.config.update(config_overrides)

    # Logging
    logging.basicConfig(
        level=app.config["LOG_LEVEL"],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # API Blueprints
    from routes.quantities_api import quantities_api
    from routes.bounds_api import bounds_api
    from routes.checks_api import checks_api
    from routes.applications_api import applications_api

    app.register_blueprint(quantities_api, url_prefix="/api")
    app.register_blueprint(bounds_api, url_prefix="/api")
    app.register_blueprint(checks_api, url_prefix="/api")
    app.register_blueprint(applications_api, url_prefix="/api")

    @app.errorhandler(RelEntError)
    def handle_relent_error(err):
        app.logger.warning("%s: %s", type(err).__name__, err.message)
        return jsonify(err.to_dict()), err.status_code

    @app.route("/")
    def index():
        return jsonify({
            "ok": True,
            "service": "relent-bounds",
            "endpoints": [
                "/api/quantities", "/api/entropy", "/api/remainder", "/api/bounds", "/api/checks",
                "/api/uncertainty", "/api/markov", "/api/optimize",
            ],
        })

    register_commands(app)

    return app


# Create app instance for Gunicorn
app = create_app()

if __name__ == "__main__":
    app.run(debug=True)
