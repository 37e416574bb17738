import os
from app import create_app, db

app = create_app()

if __name__ == '__main__':
    port = int(os.environ.get('PORT', 5000))
    with app.app_context():
        # Local runs work without `flask db upgrade`; deployed databases use the migrations
        db.create_all()
    app.run(host='0.0.0.0', port=port, debug=os.environ.get('FLASK_ENV') != 'production')
