from flask import Flask
from flask_cors import CORS
from flask_sqlalchemy import SQLAlchemy
from flask_migrate import Migrate
from dotenv import load_dotenv
import logging
import os

# Initialize SQLAlchemy
db = SQLAlchemy()
migrate = Migrate()


def configure_logging():
    level = os.environ.get('WRSN_LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def create_app(test_config=None):
    load_dotenv()
    configure_logging()

    app = Flask(__name__)

    # Configure SQLAlchemy
    app.config['SECRET_KEY'] = os.environ.get('SECRET_KEY', 'dev')
    app.config['SQLALCHEMY_DATABASE_URI'] = os.environ.get('DATABASE_URL', 'sqlite:///wrsn.db')
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    if test_config:
        app.config.update(test_config)

    # Initialize extensions
    db.init_app(app)
    migrate.init_app(app, db)
    CORS(app)

    # Register blueprints
    from .routes import main
    app.register_blueprint(main)

    from .cli import wrsn
    app.cli.add_command(wrsn)

    return app
